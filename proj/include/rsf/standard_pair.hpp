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

#ifndef RSF_STANDARD_PAIR_HPP
#define RSF_STANDARD_PAIR_HPP

#include "rsf/report.hpp"
#include "rsf/tensor.hpp"
#include "rsf/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace rsf {

  //////////////////////////////////////////////////////////////////////////////
  // One-particle vectors f = (f^alpha) in L^2(R, C^d), in the Schroedinger
  // picture where the momentum is e^q.
  //
  // Backing: an evaluator (valid on the closed strip 0 <= Im q <= pi, or only
  // on the real line) or samples on a leg space. Operations that need the
  // strip (modular flow by non-grid shifts, membership checks) require a
  // strip evaluator.

  enum class Backing { Strip, RealLine, Samples };

  class OneParticleVector {
  public:
    using Evaluator = std::function<CVector(cplx)>;

    static OneParticleVector from_evaluator( InternalIndexSpace idx, Evaluator f, Backing domain = Backing::Strip,
                                             std::string label = {} );
    // One scalar function per internal index.
    static OneParticleVector from_components( InternalIndexSpace idx, std::vector<ScalarFunction> comps,
                                              Backing domain = Backing::Strip, std::string label = {} );
    // Grid samples only: a rank-1 tensor.
    static OneParticleVector from_samples( LeggedTensor samples, std::string label = {} );

    Backing backing() const noexcept { return m_backing; }
    bool strip_backed() const noexcept { return m_backing == Backing::Strip; }
    const InternalIndexSpace& index_space() const noexcept { return m_idx; }
    int d() const noexcept { return m_idx.dim(); }
    const std::string& label() const noexcept { return m_label; }

    // Components at q. Raises insufficient-domain for sample-backed vectors
    // and for non-real q on real-line evaluators; a domain error outside the strip.
    CVector eval( cplx q ) const;
    // The vector on a leg space as a rank-1 tensor (sample-backed vectors
    // require the same leg space).
    LeggedTensor sample( const LegSpace& leg ) const;
    // Weighted L^2 norm on the leg space.
    double norm( const LegSpace& leg ) const;

    // Raw access for derived vectors.
    const Evaluator& evaluator() const noexcept { return m_eval; }
    const std::optional<LeggedTensor>& samples() const noexcept { return m_samples; }

  private:
    OneParticleVector() = default;
    InternalIndexSpace m_idx;
    Backing m_backing = Backing::Strip;
    Evaluator m_eval;
    std::optional<LeggedTensor> m_samples;
    std::string m_label;
  };

  // The one-particle data: index space, grid and mass scale (massive picture).
  struct StandardPairRep {
    StandardPairRep( InternalIndexSpace idx, RapidityGrid grid, double mass = 1.0 );
    InternalIndexSpace index_space;
    RapidityGrid grid;
    double mass;
    LegSpace leg() const { return LegSpace(index_space, grid); }
  };

  // (T(t) f)^a(q) = e^{i t e^q} f^a(q).
  OneParticleVector translate( const StandardPairRep& rep, const OneParticleVector& f, double t );
  // (T'(t) f)^a(q) = e^{i t (m^a)^2 e^{-q}} f^a(q); masses default to 1.
  OneParticleVector opposite_translate( const StandardPairRep& rep, const OneParticleVector& f, double t,
                                        const std::vector<double>& masses = {} );
  // (Delta^{-is} f)(q) = f(q + 2 pi s). Sample-backed vectors need the shift
  // to map grid nodes onto grid nodes (domain error otherwise); nodes whose
  // shifted position leaves the grid window get the value 0.
  OneParticleVector modular_flow( const StandardPairRep& rep, const OneParticleVector& f, double s );
  // (J f)^a(q) = conj f^{abar}(q). The result is known on the real line
  // (and on the grid if f was sampled).
  OneParticleVector modular_conjugate( const StandardPairRep& rep, const OneParticleVector& f );

  //////////////////////////////////////////////////////////////////////////////
  // Test functions and transforms.

  // A compactly supported test function on R with support in [lo, hi].
  struct TestFunction {
    std::function<cplx(double)> g;
    double lo = 0.0, hi = 0.0;
    std::string label;
    // C-infinity bump amplitude * exp(-1 / (1 - x^2)), x = (t - center) / halfwidth.
    static TestFunction bump( double center, double halfwidth, double amplitude = 1.0 );
    TestFunction operator+( const TestFunction& o ) const;
    TestFunction scaled( cplx c ) const;
  };

  // Accuracy target of the adaptive rule: error <= rel_tol * |integral|, or,
  // when the oscillating integrand cancels almost completely,
  // error <= l1_tol * int |g|.
  struct TransformOptions {
    double rel_tol = 1e-10;
    double l1_tol = 1e-8;
    unsigned max_depth = 15;   // at most 2^15 Gauss-Kronrod panels
  };

  // g^(+-)(z) = +-i e^z int g(t) e^{i t e^{+-z}} dt as a strip-backed scalar
  // (d = 1) vector. Raises a domain error for non-real g. Evaluation raises
  // a numerical error (achieved accuracy attached) if the adaptive rule does
  // not converge; overflowing integrands evaluate to non-finite values.
  OneParticleVector half_line_transform( const TestFunction& g, int sign, const TransformOptions& opt = {} );
  // The scalar transform itself.
  cplx half_line_value( const TestFunction& g, int sign, cplx z, const TransformOptions& opt = {} );

  // H-vector for a general bar involution from d real test functions: for a
  // fixed point a = abar, f^a = g_a^+; for a pair a < abar,
  // f^a = g_a^+ + i g_abar^+ and f^abar = g_a^+ - i g_abar^+.
  OneParticleVector h_vector( const InternalIndexSpace& idx, const std::vector<TestFunction>& gs,
                              const TransformOptions& opt = {} );

  // Compactly supported test function on R^2 (a0 time, a1 space).
  struct TestFunction2D {
    std::function<double(double, double)> f;
    double lo0 = 0, hi0 = 0, lo1 = 0, hi1 = 0;
    // Product bump centered at (c0, c1) with half-widths (h0, h1).
    static TestFunction2D bump( double c0, double c1, double h0, double h1 );
    TestFunction2D translated( double a0, double a1 ) const;
  };

  struct WedgeTransform {
    ScalarFunction plus, minus;
  };
  // f^+-(theta) = 1/(2 pi) int d^2a f(a) e^{+- i p_m(theta) . a}, with
  // p_m = (m cosh theta, m sinh theta) and p . a = p0 a0 - p1 a1. Tensor
  // Gauss-Legendre quadrature with `panels` 16-point panels per direction.
  WedgeTransform wedge_transform( const TestFunction2D& f, double m, int panels = 8 );

  //////////////////////////////////////////////////////////////////////////////
  // Membership in the standard subspace H.

  struct MembershipConfig {
    double q_lo = -10.0, q_hi = 8.0;   // window for line norms and boundary samples
    int panels = 24;                   // 8-point GL panels on the window
    double qc = 4.0;                   // Cauchy rectangle half-width
    int points_per_edge = 64;
  };

  // Three entries: "H.boundary" (max |f^a(q + i pi) - conj f^abar(q)| relative
  // to max |f|), "H.interior" (L^2 norms on the lines Im q = pi/4, pi/2, 3pi/4
  // must not exceed the larger boundary norm: residual max(0, ratio - 1)) and
  // "H.cauchy". Raises insufficient-domain unless f is strip-backed.
  std::vector<ReportEntry> check_H_membership( const OneParticleVector& f, double tol,
                                               const MembershipConfig& cfg = {} );

  //////////////////////////////////////////////////////////////////////////////
  // Massive picture.

  // (R_m f)(theta) = m e^{-theta} f(m e^{-theta}).
  ScalarFunction massive_intertwine( std::function<cplx(double)> f, double m );

  struct IsometryResult {
    double momentum_norm2;   // int_0^inf |f(p)|^2 p dp
    double rapidity_norm2;   // int_R |R_m f(theta)|^2 d theta
    double residual;         // |difference|
  };
  IsometryResult verify_isometry( const std::function<cplx(double)>& f, double m );
  // max over thetas of |R_m(e^{itp} f)(theta) - e^{i t m e^{-theta}} (R_m f)(theta)|.
  double intertwining_residual( const std::function<cplx(double)>& f, double m, double t,
                                const std::vector<double>& thetas );

}

#endif
