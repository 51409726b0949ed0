#pragma once

namespace discern::cli {

// Entry point of the discern binary. Returns the process exit code.
int main(int argc, char** argv);

}  // namespace discern::cli
