#pragma once

namespace flowerpose::cli {

// Parses arguments and runs one subcommand. Exit codes: 0 success, 1 stage
// or input error, 2 usage error, 3 evaluation outside configured limits.
int run(int argc, char** argv);

} // namespace flowerpose::cli
