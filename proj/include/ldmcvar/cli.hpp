#pragma once

namespace ldmcvar {

/// Entry point of the ldmcvar tool. Returns 0 on success, 2 on a usage or
/// configuration error, 3 on a numerical failure.
int cli_main(int argc, char** argv);

}  // namespace ldmcvar
