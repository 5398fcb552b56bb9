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

#include "rsf/standard_pair.hpp"
#include "rsf/scattering.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/sinh_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace rsf {

  namespace {

    constexpr double inf = std::numeric_limits<double>::infinity();

    void require_same_index_space( const StandardPairRep& rep, const OneParticleVector& f, const char* what )
    {
      if ( !(rep.index_space == f.index_space()) )
        RSF_THROW(Structural, what << ": vector and representation have different index spaces");
    }

    // Pointwise multiplier m(alpha, q) applied to the backing of f.
    OneParticleVector multiply( const OneParticleVector& f, std::function<cplx(int, cplx)> m,
                                const std::string& label )
    {
      if ( f.backing() != Backing::Samples ) {
        auto ev = f.evaluator();
        const int d = f.d();
        return OneParticleVector::from_evaluator(f.index_space(), [ev, m, d]( cplx q ) {
          CVector v = ev(q);
          for ( int a = 0; a < d; ++a )
            v(a) *= m(a, q);
          return v;
        }, f.backing(), label);
      }
      LeggedTensor s = *f.samples();
      const LegSpace& leg = s.leg(0);
      for ( int k = 0; k < leg.G(); ++k )
        for ( int a = 0; a < leg.d(); ++a )
          s[static_cast<std::size_t>(leg.index(k, a))] *= m(a, leg.grid().node(k));
      return OneParticleVector::from_samples(std::move(s), label);
    }

    std::vector<double> window_nodes( const MembershipConfig& cfg, std::vector<double>& weights )
    {
      const auto [x, w] = gauss_legendre_rule(8);
      std::vector<double> nodes;
      weights.clear();
      const double h = (cfg.q_hi - cfg.q_lo) / cfg.panels;
      for ( int p = 0; p < cfg.panels; ++p )
        for ( std::size_t i = 0; i < x.size(); ++i ) {
          nodes.push_back(cfg.q_lo + h * (p + 0.5 * (x[i] + 1.0)));
          weights.push_back(0.5 * h * w[i]);
        }
      return nodes;
    }

  }

  //////////////////////////////////////////////////////////////////////////////

  OneParticleVector OneParticleVector::from_evaluator( InternalIndexSpace idx, Evaluator f, Backing domain,
                                                       std::string label )
  {
    if ( !f )
      RSF_THROW(Structural, "OneParticleVector: missing evaluator");
    if ( domain == Backing::Samples )
      RSF_THROW(Structural, "OneParticleVector: an evaluator needs the strip or real-line domain");
    OneParticleVector v;
    v.m_idx = std::move(idx);
    v.m_backing = domain;
    v.m_eval = std::move(f);
    v.m_label = std::move(label);
    return v;
  }

  OneParticleVector OneParticleVector::from_components( InternalIndexSpace idx, std::vector<ScalarFunction> comps,
                                                        Backing domain, std::string label )
  {
    if ( static_cast<int>(comps.size()) != idx.dim() )
      RSF_THROW(Structural, "OneParticleVector: expected " << idx.dim() << " components, got " << comps.size());
    return from_evaluator(idx, [comps]( cplx q ) {
      CVector v(static_cast<Eigen::Index>(comps.size()));
      for ( std::size_t a = 0; a < comps.size(); ++a )
        v(static_cast<Eigen::Index>(a)) = comps[a](q);
      return v;
    }, domain, std::move(label));
  }

  OneParticleVector OneParticleVector::from_samples( LeggedTensor samples, std::string label )
  {
    if ( samples.rank() != 1 )
      RSF_THROW(Structural, "OneParticleVector: samples must form a rank-1 tensor, got rank " << samples.rank());
    OneParticleVector v;
    v.m_idx = samples.leg(0).index_space();
    v.m_backing = Backing::Samples;
    v.m_samples = std::move(samples);
    v.m_label = std::move(label);
    return v;
  }

  CVector OneParticleVector::eval( cplx q ) const
  {
    if ( m_backing == Backing::Samples )
      RSF_THROW(InsufficientDomain, "one-particle vector '" << m_label << "' is only known on grid nodes");
    if ( m_backing == Backing::RealLine && q.imag() != 0.0 )
      RSF_THROW(InsufficientDomain, "one-particle vector '" << m_label << "' is only known on the real line");
    if ( !(q.imag() >= -1e-12 && q.imag() <= pi + 1e-12) )
      RSF_THROW(Domain, "one-particle vector '" << m_label << "': " << q << " lies outside the strip");
    CVector v = m_eval(q);
    if ( v.size() != d() )
      RSF_THROW(Structural, "one-particle vector '" << m_label << "' returned " << v.size() << " components");
    return v;
  }

  LeggedTensor OneParticleVector::sample( const LegSpace& leg ) const
  {
    if ( m_samples && m_samples->leg(0) == leg )
      return *m_samples;
    if ( m_backing == Backing::Samples )
      RSF_THROW(InsufficientDomain, "one-particle vector '" << m_label << "' is sampled on a different grid");
    if ( !(leg.index_space() == m_idx) )
      RSF_THROW(Structural, "one-particle vector '" << m_label << "': leg has a different index space");
    LeggedTensor t({leg});
    for ( int k = 0; k < leg.G(); ++k ) {
      const CVector v = eval(leg.grid().node(k));
      for ( int a = 0; a < leg.d(); ++a )
        t[static_cast<std::size_t>(leg.index(k, a))] = v(a);
    }
    return t;
  }

  double OneParticleVector::norm( const LegSpace& leg ) const { return sample(leg).norm(); }

  StandardPairRep::StandardPairRep( InternalIndexSpace idx, RapidityGrid g, double m )
    : index_space(std::move(idx)), grid(std::move(g)), mass(m)
  {
    if ( !(m > 0.0) || !std::isfinite(m) )
      RSF_THROW(Parameter, "StandardPairRep: mass scale must be positive, got " << m);
  }

  //////////////////////////////////////////////////////////////////////////////

  OneParticleVector translate( const StandardPairRep& rep, const OneParticleVector& f, double t )
  {
    require_same_index_space(rep, f, "translate");
    return multiply(f, [t]( int, cplx q ) { return std::exp(I_unit * t * std::exp(q)); },
                    "T(" + std::to_string(t) + ")" + f.label());
  }

  OneParticleVector opposite_translate( const StandardPairRep& rep, const OneParticleVector& f, double t,
                                        const std::vector<double>& masses )
  {
    require_same_index_space(rep, f, "opposite_translate");
    std::vector<double> m2(static_cast<std::size_t>(f.d()), 1.0);
    if ( !masses.empty() ) {
      if ( static_cast<int>(masses.size()) != f.d() )
        RSF_THROW(Structural, "opposite_translate: expected " << f.d() << " masses, got " << masses.size());
      for ( std::size_t a = 0; a < masses.size(); ++a ) {
        if ( !(masses[a] > 0.0) )
          RSF_THROW(Parameter, "opposite_translate: masses must be positive");
        m2[a] = masses[a] * masses[a];
      }
    }
    return multiply(f, [t, m2]( int a, cplx q ) {
      return std::exp(I_unit * t * m2[static_cast<std::size_t>(a)] * std::exp(-q));
    }, "T'(" + std::to_string(t) + ")" + f.label());
  }

  OneParticleVector modular_flow( const StandardPairRep& rep, const OneParticleVector& f, double s )
  {
    require_same_index_space(rep, f, "modular_flow");
    const double shift = 2.0 * pi * s;
    const std::string label = "Delta^{-is}(" + f.label() + ")";
    if ( f.backing() != Backing::Samples ) {
      auto ev = f.evaluator();
      return OneParticleVector::from_evaluator(f.index_space(), [ev, shift]( cplx q ) { return ev(q + shift); },
                                               f.backing(), label);
    }
    const LeggedTensor& in = *f.samples();
    const LegSpace& leg = in.leg(0);
    const auto& nodes = leg.grid().nodes();
    LeggedTensor out({leg});
    for ( int k = 0; k < leg.G(); ++k ) {
      const double target = nodes[static_cast<std::size_t>(k)] + shift;
      // Values shifted in from outside the grid window vanish (truncation).
      if ( target < nodes.front() - 1e-12 || target > nodes.back() + 1e-12 )
        continue;
      auto it = std::lower_bound(nodes.begin(), nodes.end(), target - 1e-12);
      if ( it == nodes.end() || std::abs(*it - target) > 1e-12 )
        RSF_THROW(Domain, "modular_flow: shift 2 pi s = " << shift
                  << " does not map grid nodes onto grid nodes; a strip-backed vector is required");
      const int j = static_cast<int>(it - nodes.begin());
      for ( int a = 0; a < leg.d(); ++a )
        out[static_cast<std::size_t>(leg.index(k, a))] = in[static_cast<std::size_t>(leg.index(j, a))];
    }
    return OneParticleVector::from_samples(std::move(out), label);
  }

  OneParticleVector modular_conjugate( const StandardPairRep& rep, const OneParticleVector& f )
  {
    require_same_index_space(rep, f, "modular_conjugate");
    const std::string label = "J(" + f.label() + ")";
    if ( f.backing() == Backing::Samples )
      return OneParticleVector::from_samples(conjugate_bar_all_legs(*f.samples()), label);
    auto ev = f.evaluator();
    const auto bar = f.index_space().bar_map();
    return OneParticleVector::from_evaluator(f.index_space(), [ev, bar]( cplx q ) {
      const CVector v = ev(q);
      CVector out(v.size());
      for ( std::size_t a = 0; a < bar.size(); ++a )
        out(static_cast<Eigen::Index>(a)) = std::conj(v(bar[a]));
      return out;
    }, Backing::RealLine, label);
  }

  //////////////////////////////////////////////////////////////////////////////

  TestFunction TestFunction::bump( double center, double halfwidth, double amplitude )
  {
    if ( !(halfwidth > 0.0) || !std::isfinite(center) )
      RSF_THROW(Parameter, "bump: half-width must be positive, got " << halfwidth);
    TestFunction t;
    t.lo = center - halfwidth;
    t.hi = center + halfwidth;
    t.g = [center, halfwidth, amplitude]( double x ) -> cplx {
      const double y = (x - center) / halfwidth;
      const double r = 1.0 - y * y;
      return r > 0.0 ? amplitude * std::exp(-1.0 / r) : 0.0;
    };
    std::ostringstream os;
    os << "bump(" << center << "," << halfwidth << "," << amplitude << ")";
    t.label = os.str();
    return t;
  }

  TestFunction TestFunction::operator+( const TestFunction& o ) const
  {
    TestFunction t;
    t.lo = std::min(lo, o.lo);
    t.hi = std::max(hi, o.hi);
    auto a = g, b = o.g;
    const double alo = lo, ahi = hi, blo = o.lo, bhi = o.hi;
    t.g = [=]( double x ) {
      cplx v = 0.0;
      if ( x >= alo && x <= ahi ) v += a(x);
      if ( x >= blo && x <= bhi ) v += b(x);
      return v;
    };
    t.label = label + "+" + o.label;
    return t;
  }

  TestFunction TestFunction::scaled( cplx c ) const
  {
    TestFunction t = *this;
    auto a = g;
    t.g = [a, c]( double x ) { return c * a(x); };
    std::ostringstream os;
    os << c << "*" << label;
    t.label = os.str();
    return t;
  }

  namespace {

    // int |g(t)| dt, the natural scale of the transform integrand.
    double test_function_l1( const TestFunction& g )
    {
      return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        [&g]( double t ) { return std::abs(g.g(t)); }, g.lo, g.hi, 15, 1e-12);
    }

    cplx half_line_value_scaled( const TestFunction& g, int sign, cplx z, const TransformOptions& opt, double gl1 );

  }

  cplx half_line_value( const TestFunction& g, int sign, cplx z, const TransformOptions& opt )
  {
    return half_line_value_scaled(g, sign, z, opt, test_function_l1(g));
  }

  namespace {

  cplx half_line_value_scaled( const TestFunction& g, int sign, cplx z, const TransformOptions& opt, double gl1 )
  {
    if ( sign != 1 && sign != -1 )
      RSF_THROW(Parameter, "half_line_transform: sign must be +1 or -1");
    const cplx w = std::exp(static_cast<double>(sign) * z);
    auto integrand = [&g, w]( double t ) { return g.g(t) * std::exp(I_unit * t * w); };
    double err = 0.0, l1 = 0.0;
    const cplx I = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      integrand, g.lo, g.hi, opt.max_depth, opt.rel_tol, &err, &l1);
    if ( !std::isfinite(I.real()) || !std::isfinite(I.imag()) )
      return cplx(inf, inf);
    if ( err > opt.rel_tol * std::abs(I) && err > opt.l1_tol * gl1 )
      RSF_THROW_RESIDUAL(Numerical, err / gl1, "half_line_transform: adaptive quadrature did not converge at z = "
                         << z << " (error " << err << " relative to int |g| = " << gl1 << ")");
    return static_cast<double>(sign) * I_unit * std::exp(z) * I;
  }

  }

  OneParticleVector half_line_transform( const TestFunction& g, int sign, const TransformOptions& opt )
  {
    if ( sign != 1 && sign != -1 )
      RSF_THROW(Parameter, "half_line_transform: sign must be +1 or -1");
    if ( !g.g || !(g.hi > g.lo) )
      RSF_THROW(Parameter, "half_line_transform: test function needs a non-empty support interval");
    for ( int k = 0; k <= 256; ++k ) {
      const double t = g.lo + (g.hi - g.lo) * k / 256.0;
      if ( g.g(t).imag() != 0.0 )
        RSF_THROW(Domain, "half_line_transform: test function '" << g.label << "' is not real-valued at t = " << t);
    }
    TestFunction gc = g;
    std::ostringstream label;
    label << "g^" << (sign > 0 ? "+" : "-") << "[" << g.label << "]";
    const double gl1 = test_function_l1(g);
    return OneParticleVector::from_evaluator(InternalIndexSpace(1), [gc, sign, opt, gl1]( cplx z ) {
      return CVector::Constant(1, half_line_value_scaled(gc, sign, z, opt, gl1));
    }, Backing::Strip, label.str());
  }

  OneParticleVector h_vector( const InternalIndexSpace& idx, const std::vector<TestFunction>& gs,
                              const TransformOptions& opt )
  {
    const int d = idx.dim();
    if ( static_cast<int>(gs.size()) != d )
      RSF_THROW(Structural, "h_vector: expected " << d << " test functions, got " << gs.size());
    std::vector<OneParticleVector::Evaluator> hats;
    for ( const auto& g : gs )
      hats.push_back(half_line_transform(g, +1, opt).evaluator());
    const auto bar = idx.bar_map();
    std::string label = "h_vector(";
    for ( std::size_t k = 0; k < gs.size(); ++k )
      label += (k ? "," : "") + gs[k].label;
    return OneParticleVector::from_evaluator(idx, [hats, bar]( cplx z ) {
      const Eigen::Index n = static_cast<Eigen::Index>(bar.size());
      CVector h(n), f(n);
      for ( Eigen::Index a = 0; a < n; ++a )
        h(a) = hats[static_cast<std::size_t>(a)](z)(0);
      for ( Eigen::Index a = 0; a < n; ++a ) {
        const Eigen::Index b = bar[static_cast<std::size_t>(a)];
        if ( a == b )
          f(a) = h(a);
        else if ( a < b )
          f(a) = h(a) + I_unit * h(b);
        else
          f(a) = h(b) - I_unit * h(a);
      }
      return f;
    }, Backing::Strip, label + ")");
  }

  //////////////////////////////////////////////////////////////////////////////

  TestFunction2D TestFunction2D::bump( double c0, double c1, double h0, double h1 )
  {
    if ( !(h0 > 0.0) || !(h1 > 0.0) )
      RSF_THROW(Parameter, "2D bump: half-widths must be positive");
    TestFunction2D t;
    t.lo0 = c0 - h0; t.hi0 = c0 + h0;
    t.lo1 = c1 - h1; t.hi1 = c1 + h1;
    t.f = [=]( double a0, double a1 ) {
      const double x = (a0 - c0) / h0, y = (a1 - c1) / h1;
      const double rx = 1.0 - x * x, ry = 1.0 - y * y;
      return (rx > 0.0 && ry > 0.0) ? std::exp(-1.0 / rx - 1.0 / ry) : 0.0;
    };
    return t;
  }

  TestFunction2D TestFunction2D::translated( double a0, double a1 ) const
  {
    TestFunction2D t;
    t.lo0 = lo0 + a0; t.hi0 = hi0 + a0;
    t.lo1 = lo1 + a1; t.hi1 = hi1 + a1;
    auto g = f;
    t.f = [g, a0, a1]( double x0, double x1 ) { return g(x0 - a0, x1 - a1); };
    return t;
  }

  WedgeTransform wedge_transform( const TestFunction2D& f, double m, int panels )
  {
    if ( !(m > 0.0) || !std::isfinite(m) )
      RSF_THROW(Parameter, "wedge_transform: mass must be positive, got " << m);
    if ( panels < 1 )
      RSF_THROW(Parameter, "wedge_transform: need at least one panel");
    const auto [x, w] = gauss_legendre_rule(16);
    auto axis = [&]( double lo, double hi, std::vector<double>& nodes, std::vector<double>& weights ) {
      const double h = (hi - lo) / panels;
      for ( int p = 0; p < panels; ++p )
        for ( std::size_t i = 0; i < x.size(); ++i ) {
          nodes.push_back(lo + h * (p + 0.5 * (x[i] + 1.0)));
          weights.push_back(0.5 * h * w[i]);
        }
    };
    std::vector<double> n0, w0, n1, w1;
    axis(f.lo0, f.hi0, n0, w0);
    axis(f.lo1, f.hi1, n1, w1);
    struct Node { double a0, a1, wf; };
    auto nodes = std::make_shared<std::vector<Node>>();
    for ( std::size_t i = 0; i < n0.size(); ++i )
      for ( std::size_t j = 0; j < n1.size(); ++j ) {
        const double v = w0[i] * w1[j] * f.f(n0[i], n1[j]);
        if ( v != 0.0 )
          nodes->push_back({ n0[i], n1[j], v });
      }
    auto make = [nodes, m]( double sgn ) -> ScalarFunction {
      return [nodes, m, sgn]( cplx th ) {
        const cplx p0 = m * std::cosh(th), p1 = m * std::sinh(th);
        cplx acc = 0.0;
        for ( const auto& nd : *nodes )
          acc += nd.wf * std::exp(sgn * I_unit * (p0 * nd.a0 - p1 * nd.a1));
        return acc / (2.0 * pi);
      };
    };
    return { make(1.0), make(-1.0) };
  }

  //////////////////////////////////////////////////////////////////////////////

  std::vector<ReportEntry> check_H_membership( const OneParticleVector& f, double tol, const MembershipConfig& cfg )
  {
    if ( !f.strip_backed() )
      RSF_THROW(InsufficientDomain, "check_H_membership: '" << f.label() << "' is not known on the strip");
    const auto& idx = f.index_space();
    const int d = idx.dim();
    std::vector<double> w;
    const auto nodes = window_nodes(cfg, w);

    auto nan_to_inf = []( double v ) { return std::isnan(v) ? inf : v; };

    // Boundary identity, relative to the largest |f| on the samples.
    double bres = 0.0, fmax = 0.0;
    double norm_lo = 0.0, norm_hi = 0.0;
    for ( std::size_t k = 0; k < nodes.size(); ++k ) {
      const CVector lo = f.eval(nodes[k]);
      const CVector hi = f.eval(cplx(nodes[k], pi));
      for ( int a = 0; a < d; ++a ) {
        bres = std::max(bres, nan_to_inf(std::abs(hi(a) - std::conj(lo(idx.bar(a))))));
        fmax = std::max(fmax, nan_to_inf(std::abs(lo(a))));
      }
      norm_lo += w[k] * lo.squaredNorm();
      norm_hi += w[k] * hi.squaredNorm();
    }
    double boundary = ( fmax == 0.0 ) ? (bres == 0.0 ? 0.0 : inf) : bres / fmax;
    if ( !std::isfinite(fmax) )
      boundary = inf;

    // Line norms inside the strip against the larger boundary norm.
    double interior_max = 0.0;
    for ( double y : { 0.25 * pi, 0.5 * pi, 0.75 * pi } ) {
      double n2 = 0.0;
      for ( std::size_t k = 0; k < nodes.size(); ++k )
        n2 += w[k] * f.eval(cplx(nodes[k], y)).squaredNorm();
      interior_max = std::max(interior_max, nan_to_inf(n2));
    }
    const double bmax = std::max(nan_to_inf(norm_lo), nan_to_inf(norm_hi));
    double interior;
    if ( !std::isfinite(interior_max) || !std::isfinite(bmax) )
      interior = inf;
    else if ( bmax == 0.0 )
      interior = ( interior_max == 0.0 ) ? 0.0 : inf;
    else
      interior = std::max(0.0, std::sqrt(interior_max / bmax) - 1.0);

    // Cauchy rectangle, componentwise.
    AnalyticityConfig acfg;
    acfg.qc = cfg.qc;
    acfg.points_per_edge = cfg.points_per_edge;
    std::size_t n_cauchy = 0;
    const double cauchy = cauchy_residual([&f]( cplx z ) -> CMatrix { return f.eval(z); }, acfg, &n_cauchy);

    return { make_entry("H.boundary", boundary, nodes.size(), tol),
             make_entry("H.interior", interior, 3 * nodes.size(), tol),
             make_entry("H.cauchy", cauchy, n_cauchy, tol) };
  }

  //////////////////////////////////////////////////////////////////////////////

  ScalarFunction massive_intertwine( std::function<cplx(double)> f, double m )
  {
    if ( !(m > 0.0) || !std::isfinite(m) )
      RSF_THROW(Parameter, "massive_intertwine: mass must be positive, got " << m);
    return [f, m]( cplx th ) {
      if ( th.imag() != 0.0 )
        RSF_THROW(InsufficientDomain, "massive_intertwine: only real rapidities are supported");
      const double p = m * std::exp(-th.real());
      return p * f(p);
    };
  }

  IsometryResult verify_isometry( const std::function<cplx(double)>& f, double m )
  {
    const auto Rf = massive_intertwine(f, m);
    double err1 = 0.0, err2 = 0.0, l1 = 0.0;
    boost::math::quadrature::exp_sinh<double> half;
    const double lhs = half.integrate([&f]( double p ) { return std::norm(f(p)) * p; },
                                      1e-14, &err1, &l1);
    boost::math::quadrature::sinh_sinh<double> full;
    const double rhs = full.integrate([&Rf]( double th ) {
      const double v = std::norm(Rf(th));
      return std::isfinite(v) ? v : 0.0;
    }, 1e-14, &err2, &l1);
    const double scale = std::max({ std::abs(lhs), std::abs(rhs), 1e-300 });
    if ( !(err1 <= 1e-11 * scale) || !(err2 <= 1e-11 * scale) )
      RSF_THROW_RESIDUAL(Numerical, std::max(err1, err2) / scale,
                         "verify_isometry: quadrature did not converge (errors " << err1 << ", " << err2 << ")");
    return { lhs, rhs, std::abs(lhs - rhs) };
  }

  double intertwining_residual( const std::function<cplx(double)>& f, double m, double t,
                                const std::vector<double>& thetas )
  {
    const auto Rf = massive_intertwine(f, m);
    const auto Rtf = massive_intertwine([f, t]( double p ) { return std::exp(I_unit * t * p) * f(p); }, m);
    double r = 0.0;
    for ( double th : thetas ) {
      const cplx lhs = Rtf(th);
      const cplx rhs = std::exp(I_unit * t * m * std::exp(-th)) * Rf(th);
      r = std::max(r, std::abs(lhs - rhs));
    }
    return r;
  }

}
