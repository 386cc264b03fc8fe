#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "activestereo/dsi.hpp"
#include "activestereo/inference.hpp"

namespace activestereo {

// Brute-force ground truth for tiny lattices. Everything here is computed
// straight from the path definitions and shares no code with the dynamic
// programs in inference.cpp.

inline constexpr double kMaxEnumeratedPaths = 1e6;

struct EnumeratedPath {
    std::vector<NodeId> nodes;
    double log_weight = 0.0;  // sum of node log-potentials
    double weight = 0.0;      // product of node potentials
    double cost = 0.0;        // node costs summed in path order
    bool blocked = false;     // passes a node at or above block_cost
};

struct PathSet {
    int columns = 0;
    int levels = 0;
    std::vector<EnumeratedPath> paths;
};

/// Number of entry-to-exit paths, ignoring costs.
double count_paths(int columns, int levels);

/// Every entry-to-exit path. Throws GuardError above kMaxEnumeratedPaths.
PathSet enumerate(const Dsi& dsi, const CostModel& model);

struct OracleStats {
    double z = 0.0;
    double log_z = 0.0;
    double entropy = 0.0;
    // Indexed like Dsi::index().
    std::vector<double> node_probability;  // sum over paths through c of w / Z
    std::vector<double> node_wlogw;        // sum over paths through c of w log w
    double min_cost = 0.0;                 // over unblocked paths; +inf if none
};

OracleStats oracle_stats(const PathSet& paths);

/// H(paths) minus the expected path entropy after observing the column's
/// answer, with all R states pooled into one "occluded" outcome.
double oracle_ig(const PathSet& paths, int column);

/// Unscaled prefix and suffix masses per node (potential included),
/// indexed like Dsi::index(), found by walking every partial path.
std::vector<double> oracle_prefix_mass(const Dsi& dsi, const CostModel& model);
std::vector<double> oracle_suffix_mass(const Dsi& dsi, const CostModel& model);

struct RandomLattice {
    Dsi dsi;
    CostModel model;
};

/// n in [1, 7], d in [1, 3], scores uniform in [0, 3], D_l and D_r uniform
/// in [0.5, 3], beta = 1.
RandomLattice random_lattice(std::mt19937_64& rng);

/// Uniform double in [0, 1) from the top 53 bits.
double unit_uniform(std::mt19937_64& rng);

/// Writes n, d, the cost model, every score and every override.
void dump_lattice(std::ostream& out, const Dsi& dsi, const CostModel& model);

struct OracleCheckReport {
    int lattices = 0;
    int comparisons = 0;
    bool ok = true;
    double worst_relative_error = 0.0;
    std::string first_failure;
};

/// Test hook applied to the DP marginals before comparison.
using MarginalFault = std::function<void(PosteriorMarginals&)>;

/// Relative tolerance used for every floating comparison, with a 1e-14
/// absolute floor for values that are zero in exact arithmetic.
inline constexpr double kOracleTolerance = 1e-9;

/// Generates `count` random lattices and compares every DP output
/// (Z, marginals, H, node entropies, IG per column, Viterbi) against
/// enumeration. Stops at the first mismatch and dumps that lattice to `log`.
OracleCheckReport oracle_check(std::uint64_t seed, int count, std::ostream& log,
                               const MarginalFault& fault = {});

}  // namespace activestereo
