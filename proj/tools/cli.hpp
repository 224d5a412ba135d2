#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace dualflow::cli {

enum ExitCode { Success = 0, UsageError = 1, SolverFailure = 2, BoundaryHalted = 3 };

struct Options {
    std::string command;
    std::string scenario;
    std::string out = "out";
    std::optional<double> tol;
    unsigned long long seed = 0;
    std::string sweep;
};

/// One entry of a rate sweep, e.g. `r2.kf=0.5:2:4`.
struct SweepSpec {
    std::string label;
    bool forward = true;
    double start = 0.0;
    double stop = 0.0;
    int count = 0;

    static SweepSpec parse(const std::string& text);
    std::vector<double> values() const;
};

/// Runs one command and returns the process exit code.
int run(const Options& opts, std::ostream& out, std::ostream& err);

/// Parses argv and dispatches to run().
int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dualflow::cli
