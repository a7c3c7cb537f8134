#pragma once

#include "biot/io.hpp"
#include "biot/params.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace biot::cli {

enum class Command { Solve, Sweep, InfSup, Convergence, Timestep };
std::string_view to_string(Command c);

enum class RhsKind { Manufactured, Zero };

/// Reduced coefficients as explicit lists; single-point commands use the
/// first entry of each.
struct ReducedLists {
    std::vector<double> lambda{1.0};
    std::vector<double> rp_inv{1.0};
    std::vector<double> alpha_p{0.0};
};

/// Fully resolved run. Exactly one of `physical` / `reduced` is set.
struct RunConfig {
    Command command = Command::Solve;
    int mesh_n = 4;
    std::vector<int> n_list;
    std::string triple = "bdm1-rt0-p0";
    NormKind norms = NormKind::Paper;
    std::optional<PhysicalParams> physical;
    std::optional<ReducedLists> reduced;
    double eta = 10.0;
    double tol = 1e-8;
    int max_iter = 1000;
    std::filesystem::path output_dir = ".";

    std::string solver = "minres";  ///< solve/timestep: minres or direct
    RhsKind rhs = RhsKind::Manufactured;
    bool with_condition = false;
    int steps = 1;
    double source_g = 0.0;  ///< timestep: constant physical source
    int threads = 0;
    bool dump_matrices = false;
    bool dump_mesh = false;

    /// Throws ConfigError on cross-field violations.
    void validate() const;
    nlohmann::ordered_json to_json() const;
};

/// Merges config-file entries into `cfg`. Physical and reduced keys may not
/// be mixed.
void apply_config_file(const FlatConfig& file, RunConfig& cfg);

/// Executes the configured driver and writes its artifacts. Returns false
/// when a single solve stopped without converging.
bool run(const RunConfig& cfg, std::ostream& log);

/// Full command-line entry point. Errors are reported as a one-line JSON
/// record {"error": kind, "message": text} on `err`; returns the exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace biot::cli
