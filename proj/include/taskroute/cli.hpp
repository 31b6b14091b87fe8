#pragma once

namespace taskroute {

// Exit codes: 0 success, 1 usage error, 2 data or artifact error.
int cli_main(int argc, const char* const* argv);

}  // namespace taskroute
