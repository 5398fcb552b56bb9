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

#ifndef RSF_LOCALITY_HPP
#define RSF_LOCALITY_HPP

// Wedge-locality experiments at finite particle number.
//
// Two-sided tensors. A vector of H+^{(x)m} (x) H-^{(x)n} is a LeggedTensor
// whose legs 0..m-1 are plus legs and m..m+n-1 are minus legs. In the bar
// notation of the mixed chains (1-based, as in the formulas below):
//
//   factor        acts on 0-based legs of the extended tensor
//   S_{i|j}       (i-1, m+j-1)       LR function, argument q_i + q'_j
//   R+_{1,j|}     (0, j-1)           new plus leg at 0, left legs 1..m
//   S_{1|j}       (0, m+j)           (left chain, m+1 plus legs)
//   R-_{|1,j}     (m, m+j-1)         new minus leg at m, right legs m+1..m+n
//   S_{i|1}       (i-1, m)           (right chain)
//   <h|_{1|}      contraction of leg 0;  <h|_{|1}: contraction of leg m
//
// LL functions act pointwise with argument q_a - q_b in the R-convention,
// LR functions with argument q_a + q_b (plus leg first).

#include "rsf/fock.hpp"
#include "rsf/report.hpp"
#include "rsf/scattering.hpp"
#include "rsf/standard_pair.hpp"
#include "rsf/tensor.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace rsf {

  //////////////////////////////////////////////////////////////////////////////
  // Certified-local one-particle vectors.

  enum class Expectation { Local, NegativeControl };

  // A half-line transform vector together with the support of its test
  // functions and the H-membership certificate. Only vectors built from
  // test functions exist; raw grid data carries no analyticity certificate.
  class LocalizedVector {
  public:
    const OneParticleVector& vector() const noexcept { return m_f; }
    const InternalIndexSpace& index_space() const noexcept { return m_f.index_space(); }
    double support_lo() const noexcept { return m_lo; }
    double support_hi() const noexcept { return m_hi; }
    // Local iff the support lies in [0, inf) and every certificate entry passes.
    Expectation expectation() const noexcept { return m_expect; }
    bool certified() const noexcept { return m_expect == Expectation::Local; }
    const std::vector<ReportEntry>& certificate() const noexcept { return m_certificate; }
    LeggedTensor sample( const LegSpace& leg ) const { return m_f.sample(leg); }
  private:
    friend LocalizedVector localized_transform( const InternalIndexSpace&, std::vector<TestFunction>, double,
                                                const TransformOptions&, const MembershipConfig& );
    LocalizedVector( OneParticleVector f ) : m_f(std::move(f)) {}
    OneParticleVector m_f;
    double m_lo = 0.0, m_hi = 0.0;
    Expectation m_expect = Expectation::NegativeControl;
    std::vector<ReportEntry> m_certificate;
  };

  // h_vector(idx, gs) with its certificate (membership tolerance tol). If the
  // membership check cannot evaluate the vector in the strip (numerical or
  // domain error), the certificate is a single error entry "H.membership".
  LocalizedVector localized_transform( const InternalIndexSpace& idx, std::vector<TestFunction> gs,
                                       double tol = 1e-6, const TransformOptions& opt = {},
                                       const MembershipConfig& cfg = {} );

  //////////////////////////////////////////////////////////////////////////////
  // A-operators  X -> <J_H g|_p C (f inserted at p)(X).

  // One factor of a chain: op acting on legs (i, j) of the extended tensor.
  struct ChainFactor {
    TwoLegOperator op;
    int i, j;
  };

  // Kernel operators: R(q_a - q_b) (R-convention) and S(q_a + q_b).
  TwoLegOperator ll_operator( const MatrixScatteringFunction& R );
  TwoLegOperator lr_operator( const MatrixScatteringFunction& S );

  // Chains are listed as written (leftmost factor first); the rightmost
  // factor is applied first. All factors must be kernel operators without swap.
  class AOperator {
  public:
    AOperator( std::vector<ChainFactor> chain, int position, LeggedTensor f, LeggedTensor g );
    LeggedTensor apply( const LeggedTensor& X ) const;
    // <f|_p C* (J_H g inserted at p)(Y).
    LeggedTensor apply_adjoint( const LeggedTensor& Y ) const;
    int position() const noexcept { return m_pos; }
  private:
    std::vector<ChainFactor> m_chain;
    int m_pos;
    LeggedTensor m_f, m_h;
  };

  // R_{1,n+1} R_{1,n} ... R_{12} on n+1 legs.
  std::vector<ChainFactor> lemma_chain( const MatrixScatteringFunction& R, int n );
  // R+_{1,m+1|} ... R+_{12|} S_{1|1} ... S_{1|n} on 1+m+n legs (new leg 0).
  std::vector<ChainFactor> left_twist_chain( const MatrixScatteringFunction& Rp, const MatrixScatteringFunction& S,
                                             int m, int n );
  // R-_{|1,n+1} ... R-_{|12} S_{1|1} ... S_{m|1} on m+1+n legs (new leg m).
  std::vector<ChainFactor> right_twist_chain( const MatrixScatteringFunction& Rm, const MatrixScatteringFunction& S,
                                              int m, int n );

  struct AOperatorCheck {
    double residual = 0.0;   // ||A - A*|| / ||A|| (0 when A = 0)
    double norm = 0.0;       // ||A||
    double asymmetry = 0.0;  // ||A - A*||
    std::size_t blocks = 0;  // orbit blocks evaluated
  };

  // A for the chain on inputs whose legs are described by `groups` (the
  // extended tensor inserts one leg of f's space at `position`). Norms are
  // exact (orbit blocks). Precondition error unless f and g are certified,
  // or allow_control is set.
  AOperatorCheck a_operator( const std::vector<ChainFactor>& chain, int position, const LocalizedVector& f,
                             const LocalizedVector& g, const LegSpace& leg, const std::vector<LegGroup>& groups,
                             bool allow_control = false );

  //////////////////////////////////////////////////////////////////////////////
  // Field commutators.

  // Largest log2(entries) of an intermediate tensor in the commutator
  // compositions (two levels above the input); larger inputs raise a
  // capacity error.
  inline constexpr double max_log2_commutator_size = 26.0;

  struct CommutatorResult {
    double residual = 0.0;        // || C Psi || / normalization
    double route_residual = 0.0;  // || composition - closed form || / normalization
    double creation = 0.0;        // normalized creation-creation part (two levels up)
    double annihilation = 0.0;    // normalized annihilation-annihilation part (two levels down)
    double normalization = 0.0;   // ||f|| ||g|| ||(N+1) Psi||
  };

  // [J phi(g) J, phi(f)] Psi on the R-symmetric Fock space of B. The
  // composition route uses a = P b P; the closed form is (A - A*) with the
  // chain R_{1,n+1}...R_{12} on each level n.
  CommutatorResult half_line_commutator( const BraidingData& B, const LocalizedVector& f, const LocalizedVector& g,
                                         const FockVector& psi, bool allow_control = false );

  //////////////////////////////////////////////////////////////////////////////
  // The twist S~ = (+)_{m,n} S^{(m,n)},
  // S^{(m,n)} = S_{1|1} S_{2|1} ... S_{m|1} S_{1|2} ... S_{m|n}.

  class TwistOperator {
  public:
    // Capacity error when an (m, n) tensor would exceed the tensor size limit.
    TwistOperator( const MatrixScatteringFunction& S, const LegSpace& plus, const LegSpace& minus, int m, int n );
    // The product with an explicit factor order: pairs (i, j), 1-based,
    // leftmost first.
    static TwistOperator with_order( const MatrixScatteringFunction& S, const LegSpace& plus,
                                     const LegSpace& minus, int m, int n,
                                     std::vector<std::pair<int,int>> factors );
    // The displayed order.
    static std::vector<std::pair<int,int>> standard_order( int m, int n );

    LeggedTensor apply( const LeggedTensor& X ) const;
    LeggedTensor apply_adjoint( const LeggedTensor& X ) const;
    int m() const noexcept { return m_m; }
    int n() const noexcept { return m_n; }
    std::vector<LegGroup> groups() const;
  private:
    TwistOperator( TwoLegOperator S, TwoLegOperator Sadj, LegSpace plus, LegSpace minus, int m, int n,
                   std::vector<std::pair<int,int>> factors );
    TwoLegOperator m_S, m_Sadj;
    LegSpace m_plus, m_minus;
    int m_m, m_n;
    std::vector<std::pair<int,int>> m_factors;
  };

  // max || S^{(m,n)*} S^{(m,n)} - 1 || over orbit blocks.
  double twist_unitarity_residual( const TwistOperator& T );

  struct ProjectorCommutation {
    double left = 0.0;   // || [S^{(m,n)}, P_{R+}^{(m)} (x) 1] ||
    double right = 0.0;  // || [S^{(m,n)}, 1 (x) P_{R-}^{(n)}] ||
  };
  // Exact orbit norms on the given grid (used for both sides).
  ProjectorCommutation twist_projector_commutation( const MatrixScatteringFunction& Rp,
                                                    const MatrixScatteringFunction& S,
                                                    const MatrixScatteringFunction& Rm, int m, int n,
                                                    const RapidityGrid& grid );

  //////////////////////////////////////////////////////////////////////////////
  // Two-sided twisted commutators.

  enum class Side { Left, Right };
  const char* side_name( Side );

  // Left:  [J phi(g) J (x) 1, S~ (phi(f) (x) 1) S~*] (Psi (x) Phi), closed
  //        form A - A* with the left twist chain on each level (m, n).
  // Right: [1 (x) J phi(g) J, S~ (1 (x) phi(f)) S~*] (Psi (x) Phi), closed
  //        form B - B* with the right twist chain.
  // f and g live on the acted side; normalization uses N of that side.
  CommutatorResult twisted_commutator( const BraidingData& Bp, const MatrixScatteringFunction& S,
                                       const BraidingData& Bm, const LocalizedVector& f, const LocalizedVector& g,
                                       const FockVector& psi, const FockVector& phi, Side side,
                                       bool allow_control = false );

  //////////////////////////////////////////////////////////////////////////////
  // Borchers-triple data bundles.

  enum class BundleKind { Massless, Massive };
  const char* bundle_kind_name( BundleKind );

  struct ChiralSide {
    MatrixScatteringFunction R;
    RapidityGrid grid;
    int nmax = 2;
    std::vector<double> masses;   // one per internal index (massive bundles)
    LegSpace leg() const { return LegSpace(R.index_space(), grid); }
  };

  // Translation generator given as a diagonal multiplier
  // c_alpha e^{exponent * q} on one side.
  struct Generator {
    std::string name;
    Side side;
    int exponent;                        // +1 or -1
    std::vector<double> coefficients;    // c_alpha, one per internal index
    double value( int alpha, double q ) const;
  };

  class TripleBundle {
  public:
    // Without S the twist is the identity.
    static TripleBundle massless( ChiralSide plus, ChiralSide minus,
                                  std::optional<MatrixScatteringFunction> S = std::nullopt );
    // Masses default to 1 for every index.
    static TripleBundle massive( ChiralSide plus, ChiralSide minus,
                                 std::optional<MatrixScatteringFunction> S = std::nullopt );

    BundleKind kind() const noexcept { return m_kind; }
    const ChiralSide& plus() const noexcept { return m_plus; }
    const ChiralSide& minus() const noexcept { return m_minus; }
    // The LR function (identity when none was supplied).
    const MatrixScatteringFunction& S() const noexcept { return m_S; }
    bool has_S() const noexcept { return m_has_S; }
    const std::vector<Generator>& generators() const noexcept { return m_generators; }
    // Multiplier phases of the translation T(t+, t-) on one side at (alpha, q).
    cplx translation_phase( Side side, int alpha, double q, double tp, double tm ) const;
  private:
    TripleBundle( BundleKind kind, ChiralSide plus, ChiralSide minus,
                  std::optional<MatrixScatteringFunction> S );
    BundleKind m_kind;
    ChiralSide m_plus, m_minus;
    MatrixScatteringFunction m_S;
    bool m_has_S = false;
    std::vector<Generator> m_generators;
  };

  struct AssemblyConfig {
    Tolerances tol{};
    double commutation_tol = 1e-11;      // twist commutation identities
    double locality_tol = 1e-5;          // normalized commutator residuals
    int algebraic_nodes = 6;             // grid for exact orbit-norm identities
    std::vector<std::pair<double,double>> translations{{0.7, -0.3}, {-1.1, 2.5}, {3.0, 0.4}};
    std::uint64_t seed = 1;
    // Test functions of f and g (one bump per internal index, shifted by
    // component_shift per index).
    TestFunction f_bump = TestFunction::bump(0.6, 0.5);
    TestFunction g_bump = TestFunction::bump(0.8, 0.5);
    double component_shift = 0.1;
    // Parts of assemble_massless to run: the structural checks (i)-(ii) with
    // projector commutation and twist unitarity, and the twisted commutators.
    bool structure = true;
    bool locality = true;
  };

  // Certified f and g for an index space from the configured bumps.
  std::pair<LocalizedVector, LocalizedVector> default_locality_pair( const InternalIndexSpace& idx,
                                                                     const AssemblyConfig& cfg );

  // (i) S~ commutes with T+(t+) (x) T-(t-); (ii) S~ fixes the vacuum and the
  // one-sided subspaces; (iii) projector commutation and the left and right
  // twisted commutators (with their route cross-checks).
  ValidationReport assemble_massless( const TripleBundle& bundle, const AssemblyConfig& cfg = {} );
  // (i) positivity of the generator multipliers; (ii) S~ commutes with
  // T~(t+, t-); (iii) mass compatibility of R+ and R-; (iv) the two-particle
  // S-matrix of the assembled model equals assemble_block_diagonal.
  ValidationReport assemble_massive( const TripleBundle& bundle, const AssemblyConfig& cfg = {} );

  // The two-particle S-matrix on (H+ (+) H-)^{(x)2} assembled from the
  // block operators: the R+ block at i pi - q, the R- block at q and the two
  // mixed blocks from S.
  CMatrix two_particle_smatrix( const TripleBundle& bundle, double q );

  //////////////////////////////////////////////////////////////////////////////
  // Grid-refinement series for the field-locality experiment.

  struct LocalityRun {
    int G = 0;
    double residual = 0.0;
    double route_residual = 0.0;
  };
  // half_line_commutator on Psi = Omega and Psi = normalized a*(h) Omega
  // (residual: the larger of the two) for each grid size on [-qmax, qmax].
  std::vector<LocalityRun> field_locality_series( const MatrixScatteringFunction& R, const LocalizedVector& f,
                                                  const LocalizedVector& g, const std::vector<int>& sizes,
                                                  double qmax = 6.0, bool allow_control = false );

}

#endif
