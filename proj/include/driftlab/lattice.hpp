#pragma once

#include <string>
#include <vector>

namespace driftlab {

/**
 * Full-rank lattice in R^l, spanned over Z by the rows of `basis`
 * (basis[i] is the i-th basis vector).  Serialized as JSON with the
 * basis vectors as rows.
 */
struct Lattice {
    std::vector<std::vector<double>> basis;

    int dim() const { return static_cast<int>(basis.size()); }

    static Lattice from_json_text(const std::string& text);
    static Lattice load(const std::string& path);
    std::string json_text() const;
    void save(const std::string& path) const;

    void validate() const;  ///< throws ConfigError on ragged or empty basis
};

/// Dual basis: row i satisfies dual_i . basis_j = delta_ij.
/// Throws Error when the basis is singular.
std::vector<std::vector<double>> dual_basis(const Lattice& lat);

/**
 * All nonzero dual-lattice vectors p with |p|_2 <= radius, by Fincke-Pohst
 * enumeration on the dual Gram matrix.  Both signs are returned.  Throws
 * EnumerationCapError if more than cap vectors would be produced.
 */
std::vector<std::vector<double>> dual_vectors(const Lattice& lat, double radius,
                                              long cap = 10000000);

/**
 * Smallest resonance defect of the flow direction against the dual ball:
 *
 *   alpha(lat, Omega, radius) = min over p of |p . Omega|,
 *
 * p ranging over the nonzero dual vectors with |p| <= radius; +infinity
 * when that set is empty.
 */
double alpha(const Lattice& lat, const std::vector<double>& Omega, double radius,
             long cap = 10000000);

}  // namespace driftlab
