#pragma once

#include <cstdint>

namespace qfock {

/// Limits on dense materialization. Every operation that allocates a dense
/// matrix checks its dimension against these before allocating.
struct SizeCaps {
    /// Largest dense matrix dimension (graded Fock dimension, one Gram block, ...).
    std::int64_t max_dimension = 4096;
    /// Largest word length for sums over the symmetric group.
    int max_perm_length = 8;
    /// Largest dimension of the doubled space F x F for matrix-free actions.
    std::int64_t max_doubled_dimension = 250000;
    /// Largest doubled-space dimension for which a dense matrix is formed.
    std::int64_t max_doubled_dense = 4096;

    /// Defaults, with max_dimension taken from QFOCK_SIZE_CAP when it is set.
    static SizeCaps from_environment();
};

}  // namespace qfock
