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

#ifndef RSF_SCATTERING_HPP
#define RSF_SCATTERING_HPP

#include "rsf/report.hpp"
#include "rsf/tensor.hpp"
#include "rsf/types.hpp"

#include <array>
#include <string>
#include <vector>

namespace rsf {

  //////////////////////////////////////////////////////////////////////////////
  // Conventions.
  //
  // Two-particle matrices are d^2 x d^2 with row index (alpha, beta) and
  // column index (gamma, delta), flattened as alpha * d + beta (first index
  // slowest). LL/RR functions are stored in the S-convention S^{ab}_{cd}(z)
  // and consumed as functions of the rapidity difference. The R-convention is
  // the row swap R^{ab}_{cd} = S^{ba}_{cd}, i.e. R = F S with F the flip. The
  // operator acting on two legs is then (R xi)^{ab}(q1,q2) =
  // R^{ab}_{cd}(q1 - q2) xi^{cd}(q1,q2).
  //
  // LR functions act from H+ (x) H- to itself, are consumed as functions of
  // the rapidity sum, and their stored matrix acts directly (no swap); their
  // row index is (alpha+, beta-) flattened as alpha * d_- + beta.

  enum class Convention { S, R };
  enum class DeclaredKind { LL, LR, Unconstrained };

  const char* kind_name( DeclaredKind );

  struct Tolerances {
    double algebraic = 1e-10;
    double quadrature = 1e-8;
  };

  class MatrixScatteringFunction {
  public:
    using Evaluator = std::function<CMatrix(cplx)>;

    // LL (or unconstrained) function; evaluator in the S-convention.
    MatrixScatteringFunction( InternalIndexSpace idx, Evaluator eval_s, std::string label,
                              DeclaredKind kind = DeclaredKind::LL );
    // LR function from H+ (x) H- to itself; evaluator returns the acting matrix.
    static MatrixScatteringFunction left_right( InternalIndexSpace plus, InternalIndexSpace minus,
                                                Evaluator eval, std::string label );
    // Marks the function as known only on the real line: evaluation at
    // non-real points raises an insufficient-domain error.
    MatrixScatteringFunction real_line_only() const;

    // S-convention matrix (LR: the acting matrix). Raises a domain error
    // outside 0 <= Im z <= pi and a numerical error for non-finite values.
    CMatrix eval( cplx z ) const;
    // R-convention matrix. For LR functions this is the acting matrix, i.e.
    // the same as eval().
    CMatrix eval_r( cplx z ) const;

    const InternalIndexSpace& left_space() const noexcept { return m_left; }
    const InternalIndexSpace& right_space() const noexcept { return m_right; }
    // LL: d; LR: raises a structural error unless d+ == d-.
    const InternalIndexSpace& index_space() const;
    int d_left() const noexcept { return m_left.dim(); }
    int d_right() const noexcept { return m_right.dim(); }
    const std::string& label() const noexcept { return m_label; }
    DeclaredKind kind() const noexcept { return m_kind; }
    bool has_strip_domain() const noexcept { return m_strip; }

  private:
    MatrixScatteringFunction() = default;
    InternalIndexSpace m_left, m_right;
    Evaluator m_eval;
    std::string m_label;
    DeclaredKind m_kind = DeclaredKind::LL;
    bool m_strip = true;
  };

  //////////////////////////////////////////////////////////////////////////////
  // Small matrix helpers.

  // The d^2 x d^2 flip F (e_a (x) e_b -> e_b (x) e_a); d_a d_b x d_a d_b
  // for unequal factors (maps C^da (x) C^db -> C^db (x) C^da).
  CMatrix flip_matrix( int d );
  CMatrix flip_matrix( int da, int db );
  // Converts between the S- and R-conventions (the map is an involution).
  CMatrix swap_convention( const CMatrix& M, int d );
  // Embeds a two-factor matrix acting on the adjacent factors (i, i+1),
  // i in {0, 1}, of a three-factor space with dimensions dims.
  CMatrix embed3( const CMatrix& M, int i, const std::array<int,3>& dims );
  // M_{02} on a three-factor space (M acts on factors 0 and 2).
  CMatrix embed3_outer( const CMatrix& M, const std::array<int,3>& dims );

  //////////////////////////////////////////////////////////////////////////////
  // Builders.

  // sign * prod_k (sinh z - i sin b_k) / (sinh z + i sin b_k); b_k in (0, pi).
  ScalarFunction sinh_scalar( std::vector<double> blocks, int sign );
  MatrixScatteringFunction build_scalar_family( std::vector<double> blocks, int sign );
  // Constant matrix M, given in the stated convention.
  MatrixScatteringFunction build_constant( const CMatrix& M, InternalIndexSpace idx,
                                           Convention conv = Convention::R,
                                           std::string label = "constant" );
  // The free case R = 1 (S = F).
  MatrixScatteringFunction build_constant_identity( InternalIndexSpace idx );
  // R(z) = s(z) * 1 for a scalar function s.
  MatrixScatteringFunction build_scalar_times_identity( InternalIndexSpace idx, ScalarFunction s,
                                                        std::string label );
  // d-component version of the sinh family: R(z) = sinh_scalar(blocks,sign)(z) * 1.
  MatrixScatteringFunction build_sinh_identity( InternalIndexSpace idx, std::vector<double> blocks,
                                                int sign );
  // Diagonal R: R^{ab}_{cd}(z) = eps[a][b](z) delta^a_c delta^b_d.
  MatrixScatteringFunction build_diagonal_family( InternalIndexSpace idx,
                                                  std::vector<std::vector<ScalarFunction>> eps,
                                                  std::string label );
  // S^{a a'}_{b b'} = s1 d^a_{a'} d^b_{b'} + s2 d^a_{b'} d^{a'}_b + s3 d^a_b d^{a'}_{b'}
  // (S-convention; row (a, a'), column (b, b')). No validity promise.
  MatrixScatteringFunction build_on_template( InternalIndexSpace idx, ScalarFunction s1,
                                              ScalarFunction s2, ScalarFunction s3,
                                              std::string label = "on_template" );
  // R'(z) = (V (x) V) R(z) (V (x) V)* for a unitary V commuting with the
  // conjugation (V_{bar a, bar b} = conj V_{ab}); such a V maps valid models
  // to valid models. Precondition error otherwise.
  MatrixScatteringFunction build_rotated( const MatrixScatteringFunction& R, const CMatrix& V );
  // Copy of S with one entry of its stored matrix (S-convention for LL, the
  // acting matrix for LR) multiplied by factor.
  MatrixScatteringFunction perturb_entry( const MatrixScatteringFunction& S, int row, int col, cplx factor );
  // LR function whose acting matrix is R's R-convention matrix. Requires flip
  // symmetry and the LL suite; otherwise a precondition error carrying the
  // largest failing residual.
  MatrixScatteringFunction build_flip_lr( const MatrixScatteringFunction& R, const RapidityGrid& grid,
                                          const Tolerances& tol = {} );

  // Block-diagonal massive S-matrix on (H+ (+) H-)^{(x)2}. One-particle
  // index order: the d+ plus indices, then the d- minus indices.
  CMatrix assemble_block_diagonal( const MatrixScatteringFunction& Rp,
                                   const MatrixScatteringFunction& S,
                                   const MatrixScatteringFunction& Rm, double q );

  //////////////////////////////////////////////////////////////////////////////
  // Validators. Sampled over the grid nodes (pairs of nodes for YBE-type
  // identities). Residuals are maxima of spectral norms or entry moduli.

  struct AnalyticityConfig {
    double qc = 4.0;
    double im_lo = 0.1 * pi;
    double im_hi = 0.9 * pi;
    int points_per_edge = 64;
    int line_samples = 129;
  };

  ReportEntry check_unitarity( const MatrixScatteringFunction& S, const RapidityGrid& grid, double tol );
  ReportEntry check_hermitian_analyticity( const MatrixScatteringFunction& S, const RapidityGrid& grid,
                                           double tol );
  ReportEntry check_ybe( const MatrixScatteringFunction& S, const RapidityGrid& grid, double tol );
  ReportEntry check_tcp( const MatrixScatteringFunction& S, const RapidityGrid& grid, double tol );

  enum class CrossingMode { LL, LR };
  // Three entries: boundary identity, interior boundedness, Cauchy residual.
  // Raises an insufficient-domain error for real-line-only functions.
  std::vector<ReportEntry> check_crossing( const MatrixScatteringFunction& S, const RapidityGrid& grid,
                                           const Tolerances& tol, CrossingMode mode,
                                           const AnalyticityConfig& cfg = {} );
  // Strip-analyticity part only (entries "<prefix>.interior", "<prefix>.cauchy").
  double interior_boundedness_residual( const MatrixScatteringFunction::Evaluator& f,
                                        const AnalyticityConfig& cfg, std::size_t* samples = nullptr );
  double cauchy_residual( const MatrixScatteringFunction::Evaluator& f, const AnalyticityConfig& cfg,
                          std::size_t* samples = nullptr );

  // Left and right mixed Yang-Baxter identities; residual is the max of both.
  ReportEntry check_mixed_ybe( const MatrixScatteringFunction& Rp, const MatrixScatteringFunction& S,
                               const MatrixScatteringFunction& Rm, const RapidityGrid& grid, double tol );
  // max_q || F R(q) F - R(q) || in the R-convention.
  ReportEntry check_flip_symmetry( const MatrixScatteringFunction& R, const RapidityGrid& grid, double tol );
  // Optional: max_q || R(q) - R(i pi - q) || (needed to repeat the flip construction).
  ReportEntry check_repeated_flip( const MatrixScatteringFunction& R, const RapidityGrid& grid, double tol );

  class MassAssignment {
  public:
    MassAssignment( const InternalIndexSpace& idx, std::vector<double> masses );
    double operator[]( int alpha ) const { return m_masses[static_cast<std::size_t>(alpha)]; }
    const std::vector<double>& masses() const noexcept { return m_masses; }
    int dim() const noexcept { return static_cast<int>(m_masses.size()); }
  private:
    std::vector<double> m_masses;
  };

  ReportEntry check_mass_compatibility( const MatrixScatteringFunction& R, const MassAssignment& m,
                                        const RapidityGrid& grid, double tol );
  ReportEntry check_internal_symmetry( const MatrixScatteringFunction& R, const CMatrix& V,
                                       const RapidityGrid& grid, double tol );

  // Unitarity, hermitian analyticity, YBE, TCP and the three crossing entries.
  std::vector<ReportEntry> ll_suite( const MatrixScatteringFunction& R, const RapidityGrid& grid,
                                     const Tolerances& tol, const AnalyticityConfig& cfg = {} );
  // Unitarity of S, mixed YBE and the three LR crossing entries.
  std::vector<ReportEntry> lr_suite( const MatrixScatteringFunction& Rp, const MatrixScatteringFunction& S,
                                     const MatrixScatteringFunction& Rm, const RapidityGrid& grid,
                                     const Tolerances& tol, const AnalyticityConfig& cfg = {} );

}

#endif
