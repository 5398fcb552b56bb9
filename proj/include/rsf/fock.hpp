////////////////////////////////////////////////////////////////////////////////
//                                                                            //
//  This file is part of rsf, a toolkit for R-symmetric Fock spaces and       //
//  factorizing scattering data.                                              //
//                                                                            //
//  Licensed under the Apache License, Version 2.0 (the "License");           //
//  you may not use this file except in compliance with the License.          //
//  You may obtain a copy of the License at                                   //
//                                                                            //
//      http://www.apache.org/licenses/LICENSE-2.0                            //
//                                                                            //
//  Unless required by applicable law or agreed to in writing, software       //
//  distributed under the License is distributed on an "AS IS" BASIS,         //
//  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.  //
//  See the License for the specific language governing permissions and       //
//  limitations under the License.                                            //
//                                                                            //
////////////////////////////////////////////////////////////////////////////////

#ifndef RSF_FOCK_HPP
#define RSF_FOCK_HPP

// The R-symmetric Fock space over the discretized one-particle space at a
// finite truncation N_max.
//
// Conventions (legs numbered from 0):
//   * R acts on a leg pair by (R xi)^{ab}(q1, q2) = R^{ab}_{cd}(q1 - q2) xi^{cd}(q1, q2)
//     with R in the R-convention; Phi = F R.
//   * tau_j (0 <= j <= n-2) is the transposition of legs j and j+1 and
//     D_n(tau_j) = Phi_{j,j+1}. A word [j1, ..., jk] stands for the product
//     tau_{j1} ... tau_{jk}; its operator applies Phi_{jk} first.
//   * Permutations are vectors sigma with sigma[p] the image of p, composed
//     as (sigma tau)(p) = sigma(tau(p)); for R = 1, D_n(sigma) coincides with
//     permute_legs(., sigma).
//   * The sqrt(n) factors of creation and annihilation live here and not in
//     contract_bra.

#include "rsf/report.hpp"
#include "rsf/scattering.hpp"
#include "rsf/standard_pair.hpp"
#include "rsf/tensor.hpp"
#include "rsf/types.hpp"

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace rsf {

  //////////////////////////////////////////////////////////////////////////////
  // Braiding data.

  class BraidingData {
  public:
    const LegSpace& leg() const noexcept { return m_leg; }
    const MatrixScatteringFunction& function() const noexcept { return m_R; }
    // R on a leg pair (no swap) and Phi = F R.
    const TwoLegOperator& R() const noexcept { return m_Rop; }
    const TwoLegOperator& Phi() const noexcept { return m_Phi; }
    // R* on a leg pair and Phi* = R* F.
    const TwoLegOperator& R_adjoint() const noexcept { return m_Radj; }
    LeggedTensor apply_phi_adjoint( const LeggedTensor& T, int i, int j ) const;
    // max(||Phi* - Phi||, ||Phi^2 - 1||), exact over node-pair orbits.
    double involution_residual() const noexcept { return m_involution; }

  private:
    friend BraidingData braiding( const MatrixScatteringFunction&, const RapidityGrid&, const Tolerances& );
    BraidingData( MatrixScatteringFunction R, LegSpace leg );
    MatrixScatteringFunction m_R;
    LegSpace m_leg;
    TwoLegOperator m_Rop, m_Phi, m_Radj;
    double m_involution = 0.0;
  };

  // Requires unitarity and hermitian analyticity of R at every rapidity
  // difference of the grid (precondition error with the residual otherwise).
  BraidingData braiding( const MatrixScatteringFunction& R, const RapidityGrid& grid,
                         const Tolerances& tol = {} );

  //////////////////////////////////////////////////////////////////////////////
  // Symmetric group representation and projector.

  using Word = std::vector<int>;
  using Permutation = std::vector<int>;

  // A word whose product equals sigma (bubble-sort decomposition).
  Word word_for( const Permutation& sigma );
  // The product of the transpositions of the word as a permutation.
  Permutation permutation_of( const Word& w, int n );
  // All n! permutations of {0..n-1} in lexicographic order.
  std::vector<Permutation> all_permutations( int n );

  // D_n(word) applied to a rank-n tensor. Invalid letters raise a structural error.
  LeggedTensor perm_rep( const BraidingData& B, const Word& w, const LeggedTensor& T );
  LeggedTensor perm_rep_adjoint( const BraidingData& B, const Word& w, const LeggedTensor& T );
  TensorMap perm_rep( const BraidingData& B, int n, const Word& w );

  // The n!-term average. Raises a capacity error when
  // log2(n!) + n log2(dG) exceeds max_log2_projector_work.
  inline constexpr double max_log2_projector_work = 30.0;
  LeggedTensor projector_sum( const BraidingData& B, const LeggedTensor& T );
  // O(n^2) recursion P_n = (1/n) sum_i Phi_{i,i+1} ... Phi_{n-1,n} (P_{n-1} (x) 1).
  LeggedTensor projector( const BraidingData& B, const LeggedTensor& T );
  // The weighted adjoint of the projector, assembled from D_n(sigma)*.
  LeggedTensor projector_adjoint( const BraidingData& B, const LeggedTensor& T );
  TensorMap projector( const BraidingData& B, int n );

  // Operator norms over rank-n node orbits (exact for these pointwise operators).
  double projector_idempotency_residual( const BraidingData& B, int n );
  double projector_selfadjoint_residual( const BraidingData& B, int n );
  // max_sigma || D_n(sigma) P - P ||.
  double projector_invariance_residual( const BraidingData& B, int n );
  // || P_sum - P_recursive ||.
  double projector_route_residual( const BraidingData& B, int n );
  // || F_{1..n} P - prod_{i<j} R_ij P || with the product lexicographically ordered.
  double flip_product_identity_check( const BraidingData& B, int n );
  // || Phi_12 Phi_23 Phi_12 - Phi_23 Phi_12 Phi_23 || on rank 3.
  double braid_relation_residual( const BraidingData& B );

  //////////////////////////////////////////////////////////////////////////////
  // One-particle operators.

  class OneParticleOperator {
  public:
    using Multiplier = std::function<CMatrix(double)>;

    // Node-local multiplier: (A f)(q) = m(q) f(q) with m(q) a d x d matrix.
    // Evaluated at the nodes of whatever grid it acts on.
    static OneParticleOperator multiplier( const LegSpace& leg, Multiplier m );
    // General matrix on leg indices (node * d + alpha); acts on leg() only.
    static OneParticleOperator dense( const LegSpace& leg, CMatrix M );
    static OneParticleOperator identity( const LegSpace& leg );

    const LegSpace& leg() const noexcept { return m_leg; }
    bool local() const noexcept { return static_cast<bool>(m_mult); }
    // Matrix on leg indices of leg() or, for multipliers, of any grid.
    CMatrix matrix() const { return matrix_on(m_leg); }
    CMatrix matrix_on( const LegSpace& leg ) const;
    // Adjoint with respect to the weighted inner product.
    OneParticleOperator adjoint() const;
    OneParticleOperator operator*( const OneParticleOperator& o ) const;
    LeggedTensor apply( const LeggedTensor& T, int k ) const;
    LeggedTensor apply_all( const LeggedTensor& T ) const;

  private:
    OneParticleOperator( LegSpace leg, CMatrix M, Multiplier m );
    LegSpace m_leg;
    CMatrix m_M;
    Multiplier m_mult;
  };

  // T(t): multiplication by e^{i t e^q}.
  OneParticleOperator translation_operator( const LegSpace& leg, double t );
  // V (x) 1_grid for a d x d matrix V acting on internal indices.
  OneParticleOperator internal_operator( const LegSpace& leg, const CMatrix& V );

  // Antilinear map f -> M conj(f) with a linear part M.
  class AntilinearOperator {
  public:
    explicit AntilinearOperator( OneParticleOperator linear_part ) : m_M(std::move(linear_part)) {}
    // J_H: (J f)^a = conj f^{abar}.
    static AntilinearOperator modular_conjugation( const LegSpace& leg );
    const OneParticleOperator& linear_part() const noexcept { return m_M; }
    // M applied on every leg of conj(T).
    LeggedTensor apply_all( const LeggedTensor& T ) const;
  private:
    OneParticleOperator m_M;
  };

  //////////////////////////////////////////////////////////////////////////////
  // Fock vectors.

  class FockVector {
  public:
    FockVector( LegSpace leg, int nmax );   // zero vector
    static FockVector vacuum( LegSpace leg, int nmax );

    const LegSpace& leg() const noexcept { return m_leg; }
    int nmax() const noexcept { return m_nmax; }
    // Level n (0 <= n <= nmax); level 0 is a rank-0 tensor.
    const LeggedTensor& level( int n ) const;
    LeggedTensor& level( int n );
    void set_level( int n, LeggedTensor T );
    cplx vacuum_component() const { return level(0)[0]; }

    // Norm dropped above nmax by particle-number raising operations
    // (accumulated as sqrt of the sum of squares).
    double leakage() const noexcept { return m_leakage; }
    bool leaked() const noexcept { return m_leakage > 0.0; }
    void add_leakage( double dropped_norm );

    double norm() const;
    // || (N + c)^{1/2} Psi ||.
    double number_weighted_norm( double c ) const;
    bool all_finite() const;

    FockVector& operator+=( const FockVector& );
    FockVector& operator-=( const FockVector& );
    FockVector& operator*=( cplx );

  private:
    void require_compatible( const FockVector& o ) const;
    LegSpace m_leg;
    int m_nmax;
    std::vector<LeggedTensor> m_levels;
    double m_leakage = 0.0;
  };

  FockVector operator+( FockVector, const FockVector& );
  FockVector operator-( FockVector, const FockVector& );
  FockVector operator*( cplx, FockVector );
  cplx inner_product( const FockVector& a, const FockVector& b );

  // Sum over levels of || P Psi_n - Psi_n ||.
  double symmetry_residual( const BraidingData& B, const FockVector& psi );
  // P applied to random Gaussian tensors on every level, normalized to 1.
  // Levels above top_level (default nmax) are zero.
  FockVector random_symmetric( const BraidingData& B, int nmax, std::mt19937_64& rng, int top_level = -1 );
  // The vector f at level 1 of a Fock space with truncation nmax.
  FockVector one_particle_state( const LegSpace& leg, int nmax, const LeggedTensor& f );

  //////////////////////////////////////////////////////////////////////////////
  // Second quantization.

  using FockMap = std::function<FockVector(const FockVector&)>;

  // || (A (x) A) R - R (A (x) A) || (exact for local A, power iteration otherwise).
  double morphism_residual( const BraidingData& B, const OneParticleOperator& A );
  // || (A (x) A) R - R* (A (x) A) || for antilinear A.
  double antilinear_morphism_residual( const BraidingData& B, const AntilinearOperator& A );

  // Gamma(A) = 1 (+) A (+) A(x)A (+) ...; precondition error unless the
  // morphism residual is <= tol.
  FockMap second_quantize( const BraidingData& B, const OneParticleOperator& A, double tol = 1e-10 );
  // hat Gamma(A) = conj (+) F_{1..n} A^{(x) n}; precondition error unless the
  // antilinear morphism residual is <= tol.
  FockMap hat_second_quantize( const BraidingData& B, const AntilinearOperator& A, double tol = 1e-10 );
  // Level-n action of Gamma(A) and hat Gamma(A).
  LeggedTensor second_quantize_level( const OneParticleOperator& A, const LeggedTensor& T );
  LeggedTensor hat_second_quantize_level( const AntilinearOperator& A, const LeggedTensor& T );

  //////////////////////////////////////////////////////////////////////////////
  // Creation, annihilation and fields. One-particle arguments are rank-1
  // tensors over the leg space of the braiding (OneParticleVector overloads
  // sample first).

  enum class CreationPath { XFormula, Projector };

  // Level n+1 of a(f) Psi = sqrt(n+1) P (f (x) Psi_n). The X path uses
  // (1/sqrt(n+1)) sum_i X_{1i} (f (x) Psi_n), X_{1i} = Phi_{i-1,i} ... Phi_{12},
  // which assumes an R-symmetric Psi. The level above nmax is dropped and
  // recorded as leakage.
  FockVector create( const BraidingData& B, const LeggedTensor& f, const FockVector& psi,
                     CreationPath path = CreationPath::XFormula );
  FockVector create( const BraidingData& B, const OneParticleVector& f, const FockVector& psi,
                     CreationPath path = CreationPath::XFormula );
  // Level n-1 of a(f)* Psi = sqrt(n) <f|_1 Psi_n.
  FockVector annihilate( const BraidingData& B, const LeggedTensor& f, const FockVector& psi );
  FockVector annihilate( const BraidingData& B, const OneParticleVector& f, const FockVector& psi );

  FockVector segal_field( const BraidingData& B, const LeggedTensor& f, const FockVector& psi );
  FockVector segal_field( const BraidingData& B, const OneParticleVector& f, const FockVector& psi );

  enum class ReflectedRoute { Conjugation, LastLeg };
  // J phi(g) J Psi. Conjugation: hat Gamma(J_H) around the field. LastLeg:
  // J a(g)* J Psi_n = sqrt(n) <J_H g|_n Psi_n and
  // J a(g) J Psi_n = sqrt(n+1) P (Psi_n (x) J_H g).
  FockVector reflected_field( const BraidingData& B, const LeggedTensor& g, const FockVector& psi,
                              ReflectedRoute route = ReflectedRoute::LastLeg );
  FockVector reflected_field( const BraidingData& B, const OneParticleVector& g, const FockVector& psi,
                              ReflectedRoute route = ReflectedRoute::LastLeg );
  // Pieces of the last-leg route.
  FockVector reflected_creation( const BraidingData& B, const LeggedTensor& g, const FockVector& psi );
  FockVector reflected_annihilation( const BraidingData& B, const LeggedTensor& g, const FockVector& psi );
  // Gamma-hat(J_H) applied to a Fock vector.
  FockVector fock_conjugation( const FockVector& psi );

  //////////////////////////////////////////////////////////////////////////////
  // Level operations on the contiguous block of legs [off, off + len) of a
  // tensor; all other legs are spectators (used for the two-sided Fock space).
  // With Symmetry::Assumed the input block is taken to be R-symmetric (X
  // path); Symmetry::Enforced applies the definition a = P b P with the
  // recursive projector on input and output.

  enum class Symmetry { Assumed, Enforced };

  // T with the rank-1 tensor f inserted as leg `pos`.
  LeggedTensor insert_leg( const LeggedTensor& T, const LeggedTensor& f, int pos );
  // P_R on the block.
  LeggedTensor block_projector( const BraidingData& B, const LeggedTensor& T, int off, int len );
  // sqrt(len+1) P (f (x) block); the new leg is at position off.
  LeggedTensor block_create( const BraidingData& B, const LeggedTensor& f, const LeggedTensor& T, int off, int len,
                             Symmetry sym = Symmetry::Assumed );
  // sqrt(len) <f|_off.
  LeggedTensor block_annihilate( const LeggedTensor& f, const LeggedTensor& T, int off, int len );
  // J a(g) J on the block: sqrt(len+1) P (block (x) J_H g); new leg at off + len.
  LeggedTensor block_reflected_create( const BraidingData& B, const LeggedTensor& g, const LeggedTensor& T,
                                       int off, int len, Symmetry sym = Symmetry::Assumed );
  // J a(g)* J on the block: sqrt(len) <J_H g|_{off+len-1}.
  LeggedTensor block_reflected_annihilate( const LeggedTensor& g, const LeggedTensor& T, int off, int len );

  // Both particle bounds on `trials` seeded random symmetric vectors. The
  // residual is the largest relative violation max(0, lhs / rhs - 1);
  // creation is tested on vectors with an empty top level (no leakage).
  ReportEntry check_particle_bounds( const BraidingData& B, const LeggedTensor& f, int trials, int nmax,
                                     std::uint64_t seed, double slack = 1e-12 );

}

#endif
