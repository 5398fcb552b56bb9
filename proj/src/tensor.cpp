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

#include "rsf/tensor.hpp"

#include <boost/math/special_functions/legendre.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>

namespace rsf {

  //////////////////////////////////////////////////////////////////////////////

  InternalIndexSpace::InternalIndexSpace( int d )
  {
    if ( d < 1 )
      RSF_THROW(Parameter, "InternalIndexSpace: dimension must be >= 1, got " << d);
    m_bar.resize(static_cast<std::size_t>(d));
    std::iota(m_bar.begin(), m_bar.end(), 0);
  }

  InternalIndexSpace::InternalIndexSpace( int d, std::vector<int> bar )
    : m_bar(std::move(bar))
  {
    if ( d < 1 )
      RSF_THROW(Parameter, "InternalIndexSpace: dimension must be >= 1, got " << d);
    if ( static_cast<int>(m_bar.size()) != d )
      RSF_THROW(Parameter, "InternalIndexSpace: bar map has " << m_bar.size()
                << " entries, expected " << d);
    for ( int a = 0; a < d; ++a ) {
      int b = m_bar[static_cast<std::size_t>(a)];
      if ( b < 0 || b >= d )
        RSF_THROW(Parameter, "InternalIndexSpace: bar(" << a << ") = " << b << " out of range");
      if ( m_bar[static_cast<std::size_t>(b)] != a )
        RSF_THROW(Parameter, "InternalIndexSpace: bar is not an involution at index " << a);
    }
  }

  //////////////////////////////////////////////////////////////////////////////

  std::pair<std::vector<double>, std::vector<double>> gauss_legendre_rule( int n )
  {
    if ( n < 1 )
      RSF_THROW(Parameter, "gauss_legendre_rule: order must be >= 1, got " << n);
    std::vector<double> x, w;
    for ( double z : boost::math::legendre_p_zeros<double>(n) ) {
      double dp = boost::math::legendre_p_prime(n, z);
      double wz = 2.0 / ((1.0 - z * z) * dp * dp);
      if ( z == 0.0 ) {
        x.push_back(0.0); w.push_back(wz);
      } else {
        x.push_back(z); w.push_back(wz);
        x.push_back(-z); w.push_back(wz);
      }
    }
    std::vector<std::size_t> perm(x.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::sort(perm.begin(), perm.end(), [&x](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> xs, ws;
    for ( std::size_t i : perm ) {
      xs.push_back(x[i]);
      ws.push_back(w[i]);
    }
    return {xs, ws};
  }

  RapidityGrid RapidityGrid::gauss_legendre( int G, double qmax )
  {
    if ( G < 1 )
      RSF_THROW(Parameter, "RapidityGrid: number of nodes must be >= 1, got " << G);
    if ( G > 4096 )
      RSF_THROW(Capacity, "RapidityGrid: " << G << " nodes exceed the limit of 4096");
    if ( !(qmax > 0.0) || !std::isfinite(qmax) )
      RSF_THROW(Parameter, "RapidityGrid: qmax must be positive and finite, got " << qmax);

    const int order = ( G % 8 == 0 ) ? 8 : G;
    const int panels = G / order;

    const auto [x, w] = gauss_legendre_rule(order);

    std::vector<double> nodes, weights;
    nodes.reserve(static_cast<std::size_t>(G));
    weights.reserve(static_cast<std::size_t>(G));
    const double h = 2.0 * qmax / panels;
    for ( int p = 0; p < panels; ++p ) {
      const double a = -qmax + p * h;
      for ( std::size_t i = 0; i < x.size(); ++i ) {
        nodes.push_back(a + 0.5 * h * (x[i] + 1.0));
        weights.push_back(0.5 * h * w[i]);
      }
    }
    return RapidityGrid(std::move(nodes), std::move(weights), qmax);
  }

  RapidityGrid::RapidityGrid( std::vector<double> nodes, std::vector<double> weights, double qmax )
    : m_nodes(std::move(nodes)), m_weights(std::move(weights)), m_qmax(qmax)
  {
    if ( m_nodes.empty() || m_nodes.size() != m_weights.size() )
      RSF_THROW(Structural, "RapidityGrid: nodes and weights must be non-empty and of equal length");
    for ( std::size_t k = 0; k < m_nodes.size(); ++k ) {
      if ( !std::isfinite(m_nodes[k]) || !(m_weights[k] > 0.0) || !std::isfinite(m_weights[k]) )
        RSF_THROW(Parameter, "RapidityGrid: node " << k << " has invalid value or non-positive weight");
      if ( k > 0 && !(m_nodes[k] > m_nodes[k - 1]) )
        RSF_THROW(Parameter, "RapidityGrid: nodes must be strictly increasing (index " << k << ")");
    }
  }

  RapidityGrid RapidityGrid::subgrid( const std::vector<int>& ks ) const
  {
    std::vector<double> n, w;
    for ( int k : ks ) {
      if ( k < 0 || k >= size() )
        RSF_THROW(Structural, "RapidityGrid::subgrid: node index " << k << " out of range");
      n.push_back(node(k));
      w.push_back(weight(k));
    }
    return RapidityGrid(std::move(n), std::move(w), m_qmax);
  }

  std::string RapidityGrid::describe() const
  {
    std::ostringstream os;
    os << "composite Gauss-Legendre, G=" << size() << ", qmax=" << m_qmax;
    return os.str();
  }

  //////////////////////////////////////////////////////////////////////////////

  LegSpace::LegSpace( InternalIndexSpace idx, RapidityGrid grid )
    : m_idx(std::make_shared<const InternalIndexSpace>(std::move(idx))),
      m_grid(std::make_shared<const RapidityGrid>(std::move(grid)))
  {
  }

  std::vector<double> LegSpace::leg_weights() const
  {
    std::vector<double> w(static_cast<std::size_t>(dim()));
    for ( int k = 0; k < G(); ++k )
      for ( int a = 0; a < d(); ++a )
        w[static_cast<std::size_t>(index(k, a))] = m_grid->weight(k);
    return w;
  }

  bool LegSpace::operator==( const LegSpace& o ) const
  {
    if ( m_idx != o.m_idx && !(*m_idx == *o.m_idx) )
      return false;
    return m_grid == o.m_grid || *m_grid == *o.m_grid;
  }

  //////////////////////////////////////////////////////////////////////////////

  namespace {

    std::vector<std::size_t> make_strides( const std::vector<LegSpace>& legs )
    {
      std::vector<std::size_t> s(legs.size());
      std::size_t acc = 1;
      for ( std::size_t k = legs.size(); k-- > 0; ) {
        s[k] = acc;
        acc *= static_cast<std::size_t>(legs[k].dim());
      }
      return s;
    }

    std::size_t checked_size( const std::vector<LegSpace>& legs )
    {
      double lg = 0.0;
      for ( const auto& l : legs )
        lg += std::log2(static_cast<double>(l.dim()));
      if ( lg > LeggedTensor::max_log2_size + 1e-12 )
        RSF_THROW(Capacity, "LeggedTensor: rank " << legs.size() << " with total log2 size "
                  << lg << " exceeds the limit " << LeggedTensor::max_log2_size);
      std::size_t n = 1;
      for ( const auto& l : legs )
        n *= static_cast<std::size_t>(l.dim());
      return n;
    }

    // Product weight of every flat index.
    std::vector<double> flat_weights( const std::vector<LegSpace>& legs )
    {
      std::vector<double> w{1.0};
      for ( const auto& l : legs ) {
        auto lw = l.leg_weights();
        std::vector<double> nw;
        nw.reserve(w.size() * lw.size());
        for ( double a : w )
          for ( double b : lw )
            nw.push_back(a * b);
        w.swap(nw);
      }
      return w;
    }

    // Calls fn(offset) for every multi-index with the legs in `skip` held at 0.
    template <class Fn>
    void for_each_base( const LeggedTensor& T, std::initializer_list<int> skip, Fn&& fn )
    {
      const int n = T.rank();
      std::vector<int> legs;
      for ( int k = 0; k < n; ++k )
        if ( std::find(skip.begin(), skip.end(), k) == skip.end() )
          legs.push_back(k);
      std::vector<int> idx(legs.size(), 0);
      std::size_t offset = 0;
      while ( true ) {
        fn(offset);
        int p = static_cast<int>(legs.size()) - 1;
        for ( ; p >= 0; --p ) {
          int leg = legs[static_cast<std::size_t>(p)];
          auto& i = idx[static_cast<std::size_t>(p)];
          ++i;
          offset += T.stride(leg);
          if ( i < T.leg(leg).dim() )
            break;
          offset -= T.stride(leg) * static_cast<std::size_t>(i);
          i = 0;
        }
        if ( p < 0 )
          break;
      }
    }

    void require_leg( const LeggedTensor& T, int k, const char* what )
    {
      if ( k < 0 || k >= T.rank() )
        RSF_THROW(Structural, what << ": leg " << k << " out of range for rank " << T.rank());
    }

  }

  LeggedTensor::LeggedTensor()
    : m_data(1, cplx(0.0))
  {
  }

  LeggedTensor::LeggedTensor( std::vector<LegSpace> legs )
    : m_legs(std::move(legs))
  {
    m_strides = make_strides(m_legs);
    m_data.assign(checked_size(m_legs), cplx(0.0));
  }

  LeggedTensor LeggedTensor::scalar( cplx value )
  {
    LeggedTensor t;
    t.m_data[0] = value;
    return t;
  }

  LeggedTensor LeggedTensor::from_values( std::vector<LegSpace> legs, std::vector<cplx> values )
  {
    LeggedTensor t(std::move(legs));
    if ( values.size() != t.size() )
      RSF_THROW(Structural, "LeggedTensor::from_values: " << values.size()
                << " values supplied for " << t.size() << " entries");
    t.m_data = std::move(values);
    return t;
  }

  std::size_t LeggedTensor::flat_index( const std::vector<int>& li ) const
  {
    if ( static_cast<int>(li.size()) != rank() )
      RSF_THROW(Structural, "LeggedTensor: " << li.size() << " indices for rank " << rank());
    std::size_t f = 0;
    for ( int k = 0; k < rank(); ++k ) {
      int i = li[static_cast<std::size_t>(k)];
      if ( i < 0 || i >= leg(k).dim() )
        RSF_THROW(Structural, "LeggedTensor: index " << i << " out of range on leg " << k);
      f += static_cast<std::size_t>(i) * stride(k);
    }
    return f;
  }

  bool LeggedTensor::same_space( const LeggedTensor& o ) const
  {
    return m_legs == o.m_legs;
  }

  bool LeggedTensor::all_finite() const
  {
    return std::all_of(m_data.begin(), m_data.end(),
                       []( const cplx& z ) { return std::isfinite(z.real()) && std::isfinite(z.imag()); });
  }

  double LeggedTensor::norm() const
  {
    return std::sqrt(std::max(0.0, inner_product(*this, *this).real()));
  }

  LeggedTensor& LeggedTensor::operator+=( const LeggedTensor& o )
  {
    if ( !same_space(o) )
      RSF_THROW(Structural, "LeggedTensor: addition of tensors over different spaces");
    for ( std::size_t i = 0; i < m_data.size(); ++i )
      m_data[i] += o.m_data[i];
    return *this;
  }

  LeggedTensor& LeggedTensor::operator-=( const LeggedTensor& o )
  {
    if ( !same_space(o) )
      RSF_THROW(Structural, "LeggedTensor: subtraction of tensors over different spaces");
    for ( std::size_t i = 0; i < m_data.size(); ++i )
      m_data[i] -= o.m_data[i];
    return *this;
  }

  LeggedTensor& LeggedTensor::operator*=( cplx c )
  {
    for ( auto& z : m_data )
      z *= c;
    return *this;
  }

  LeggedTensor operator+( LeggedTensor a, const LeggedTensor& b ) { a += b; return a; }
  LeggedTensor operator-( LeggedTensor a, const LeggedTensor& b ) { a -= b; return a; }
  LeggedTensor operator*( cplx c, LeggedTensor a ) { a *= c; return a; }

  cplx inner_product( const LeggedTensor& s, const LeggedTensor& t )
  {
    if ( !s.same_space(t) )
      RSF_THROW(Structural, "inner_product: tensors of rank " << s.rank() << " and " << t.rank()
                << " do not share a space");
    // The weight multiplies conj(s)*t as a whole so that <s,t> = conj(<t,s>)
    // holds exactly in floating point.
    if ( s.rank() == 0 )
      return std::conj(s[0]) * t[0];
    auto w = flat_weights(s.legs());
    cplx acc = 0.0;
    for ( std::size_t i = 0; i < s.size(); ++i )
      acc += w[i] * (std::conj(s[i]) * t[i]);
    return acc;
  }

  std::vector<int> reversal_permutation( int n )
  {
    std::vector<int> s(static_cast<std::size_t>(n));
    for ( int p = 0; p < n; ++p )
      s[static_cast<std::size_t>(p)] = n - 1 - p;
    return s;
  }

  LeggedTensor permute_legs( const LeggedTensor& T, const std::vector<int>& sigma )
  {
    const int n = T.rank();
    if ( static_cast<int>(sigma.size()) != n )
      RSF_THROW(Structural, "permute_legs: permutation of length " << sigma.size()
                << " for rank " << n);
    std::vector<int> inv(static_cast<std::size_t>(n), -1);
    for ( int p = 0; p < n; ++p ) {
      int s = sigma[static_cast<std::size_t>(p)];
      if ( s < 0 || s >= n || inv[static_cast<std::size_t>(s)] != -1 )
        RSF_THROW(Structural, "permute_legs: not a permutation of 0.." << n - 1);
      inv[static_cast<std::size_t>(s)] = p;
    }
    // Result leg sigma(p) carries T's leg p.
    std::vector<LegSpace> legs;
    legs.reserve(static_cast<std::size_t>(n));
    for ( int j = 0; j < n; ++j )
      legs.push_back(T.leg(inv[static_cast<std::size_t>(j)]));
    LeggedTensor out(std::move(legs));
    if ( n == 0 ) {
      out[0] = T[0];
      return out;
    }
    std::vector<std::size_t> src_stride(static_cast<std::size_t>(n));
    for ( int j = 0; j < n; ++j )
      src_stride[static_cast<std::size_t>(j)] = T.stride(inv[static_cast<std::size_t>(j)]);
    std::vector<int> idx(static_cast<std::size_t>(n), 0);
    std::size_t src = 0;
    for ( std::size_t f = 0; f < out.size(); ++f ) {
      out[f] = T[src];
      for ( int j = n - 1; j >= 0; --j ) {
        auto& i = idx[static_cast<std::size_t>(j)];
        ++i;
        src += src_stride[static_cast<std::size_t>(j)];
        if ( i < out.leg(j).dim() )
          break;
        src -= src_stride[static_cast<std::size_t>(j)] * static_cast<std::size_t>(i);
        i = 0;
      }
    }
    return out;
  }

  LeggedTensor tensor_product( const LeggedTensor& a, const LeggedTensor& b )
  {
    std::vector<LegSpace> legs = a.legs();
    legs.insert(legs.end(), b.legs().begin(), b.legs().end());
    LeggedTensor out(std::move(legs));
    std::size_t f = 0;
    for ( std::size_t i = 0; i < a.size(); ++i )
      for ( std::size_t j = 0; j < b.size(); ++j )
        out[f++] = a[i] * b[j];
    return out;
  }

  LeggedTensor contract_bra( const LeggedTensor& v, int k, const LeggedTensor& T )
  {
    if ( T.rank() == 0 )
      RSF_THROW(Domain, "contract_bra: cannot contract a rank-0 tensor");
    require_leg(T, k, "contract_bra");
    if ( v.rank() != 1 || v.leg(0) != T.leg(k) )
      RSF_THROW(Structural, "contract_bra: bra must be rank 1 over the space of leg " << k);
    std::vector<LegSpace> legs = T.legs();
    legs.erase(legs.begin() + k);
    LeggedTensor out(std::move(legs));
    const auto w = T.leg(k).leg_weights();
    std::vector<cplx> bra(w.size());
    for ( std::size_t i = 0; i < w.size(); ++i )
      bra[i] = w[i] * std::conj(v[i]);
    // out index = (outer, inner) with leg k removed.
    const std::size_t sk = T.stride(k);
    const std::size_t dk = static_cast<std::size_t>(T.leg(k).dim());
    const std::size_t outer = T.size() / (sk * dk);
    for ( std::size_t o = 0; o < outer; ++o )
      for ( std::size_t m = 0; m < dk; ++m ) {
        const cplx c = bra[m];
        if ( c == 0.0 )
          continue;
        const cplx* src = T.values().data() + o * sk * dk + m * sk;
        cplx* dst = out.values().data() + o * sk;
        for ( std::size_t i = 0; i < sk; ++i )
          dst[i] += c * src[i];
      }
    return out;
  }

  LeggedTensor apply_single_leg( const CMatrix& A, int k, const LeggedTensor& T )
  {
    require_leg(T, k, "apply_single_leg");
    const int D = T.leg(k).dim();
    if ( A.rows() != D || A.cols() != D )
      RSF_THROW(Structural, "apply_single_leg: operator is " << A.rows() << "x" << A.cols()
                << ", leg dimension is " << D);
    LeggedTensor out(T.legs());
    const std::size_t sk = T.stride(k);
    CVector v(D), w(D);
    for_each_base(T, {k}, [&]( std::size_t base ) {
      for ( int i = 0; i < D; ++i )
        v[i] = T[base + static_cast<std::size_t>(i) * sk];
      w.noalias() = A * v;
      for ( int i = 0; i < D; ++i )
        out[base + static_cast<std::size_t>(i) * sk] = w[i];
    });
    return out;
  }

  LeggedTensor conjugate_bar_all_legs( const LeggedTensor& T )
  {
    LeggedTensor out(T.legs());
    const int n = T.rank();
    if ( n == 0 ) {
      out[0] = std::conj(T[0]);
      return out;
    }
    // Map each leg index (k, alpha) -> (k, bar alpha); the map is an involution.
    std::vector<std::vector<int>> legmap(static_cast<std::size_t>(n));
    for ( int p = 0; p < n; ++p ) {
      const auto& L = T.leg(p);
      auto& m = legmap[static_cast<std::size_t>(p)];
      m.resize(static_cast<std::size_t>(L.dim()));
      for ( int k = 0; k < L.G(); ++k )
        for ( int a = 0; a < L.d(); ++a )
          m[static_cast<std::size_t>(L.index(k, a))] = L.index(k, L.index_space().bar(a));
    }
    std::vector<int> idx(static_cast<std::size_t>(n), 0);
    std::size_t src = 0;
    for ( int p = 0; p < n; ++p )
      src += static_cast<std::size_t>(legmap[static_cast<std::size_t>(p)][0]) * T.stride(p);
    for ( std::size_t f = 0; f < out.size(); ++f ) {
      out[f] = std::conj(T[src]);
      for ( int p = n - 1; p >= 0; --p ) {
        auto& i = idx[static_cast<std::size_t>(p)];
        const auto& m = legmap[static_cast<std::size_t>(p)];
        src -= static_cast<std::size_t>(m[static_cast<std::size_t>(i)]) * T.stride(p);
        ++i;
        if ( i < T.leg(p).dim() ) {
          src += static_cast<std::size_t>(m[static_cast<std::size_t>(i)]) * T.stride(p);
          break;
        }
        i = 0;
        src += static_cast<std::size_t>(m[0]) * T.stride(p);
      }
    }
    return out;
  }

  LeggedTensor random_tensor( std::vector<LegSpace> legs, std::mt19937_64& rng )
  {
    LeggedTensor out(std::move(legs));
    std::normal_distribution<double> nd(0.0, 1.0);
    for ( std::size_t i = 0; i < out.size(); ++i ) {
      double re = nd(rng);
      double im = nd(rng);
      out[i] = cplx(re, im);
    }
    return out;
  }

  //////////////////////////////////////////////////////////////////////////////

  TwoLegOperator TwoLegOperator::dense( CMatrix M )
  {
    if ( M.rows() != M.cols() )
      RSF_THROW(Structural, "TwoLegOperator::dense: matrix must be square");
    TwoLegOperator op;
    op.m_is_dense = true;
    op.m_dense = std::move(M);
    return op;
  }

  TwoLegOperator TwoLegOperator::kernel( Kernel k, bool swap_after )
  {
    // Kernels are re-evaluated at the same node pairs many times (orbit
    // blocks, repeated factors); memoize the blocks per operator.
    struct Memo {
      std::mutex mutex;
      std::map<std::pair<double,double>, CMatrix> blocks;
    };
    auto memo = std::make_shared<Memo>();
    TwoLegOperator op;
    op.m_kernel = [k = std::move(k), memo]( double qa, double qb ) -> CMatrix {
      const std::pair<double,double> key{qa, qb};
      {
        std::lock_guard<std::mutex> lock(memo->mutex);
        auto it = memo->blocks.find(key);
        if ( it != memo->blocks.end() )
          return it->second;
      }
      CMatrix b = k(qa, qb);
      std::lock_guard<std::mutex> lock(memo->mutex);
      memo->blocks.emplace(key, b);
      return b;
    };
    op.m_swap = swap_after;
    return op;
  }

  TwoLegOperator TwoLegOperator::identity()
  {
    TwoLegOperator op;
    op.m_identity = true;
    return op;
  }

  TwoLegOperator TwoLegOperator::flip()
  {
    TwoLegOperator op;
    op.m_identity = true;
    op.m_swap = true;
    return op;
  }

  CMatrix TwoLegOperator::block( double qa, double qb, int da, int db ) const
  {
    if ( m_is_dense )
      RSF_THROW(Structural, "TwoLegOperator::block: dense operators have no node blocks");
    if ( m_identity )
      return CMatrix::Identity(da * db, da * db);
    CMatrix b = m_kernel(qa, qb);
    if ( b.rows() != da * db || b.cols() != da * db )
      RSF_THROW(Structural, "TwoLegOperator: kernel block is " << b.rows() << "x" << b.cols()
                << ", expected " << da * db);
    return b;
  }

  TwoLegOperator TwoLegOperator::adjoint() const
  {
    if ( m_is_dense || m_swap )
      RSF_THROW(Structural, "TwoLegOperator::adjoint: only defined for non-swapping kernel operators");
    if ( m_identity )
      return *this;
    auto k = m_kernel;
    return kernel([k]( double qa, double qb ) -> CMatrix { return k(qa, qb).adjoint(); });
  }

  LeggedTensor TwoLegOperator::apply( const LeggedTensor& T, int i, int j ) const
  {
    require_leg(T, i, "TwoLegOperator::apply");
    require_leg(T, j, "TwoLegOperator::apply");
    if ( i == j )
      RSF_THROW(Structural, "TwoLegOperator::apply: legs must differ, got " << i << " twice");
    const LegSpace& La = T.leg(i);
    const LegSpace& Lb = T.leg(j);
    if ( m_swap && La != Lb )
      RSF_THROW(Structural, "TwoLegOperator::apply: leg swap requires equal leg spaces");
    const std::size_t si = T.stride(i), sj = T.stride(j);
    LeggedTensor out(T.legs());

    if ( m_is_dense ) {
      const int Da = La.dim(), Db = Lb.dim();
      if ( m_dense.rows() != Da * Db )
        RSF_THROW(Structural, "TwoLegOperator::apply: dense operator of size " << m_dense.rows()
                  << " on legs of dimension " << Da << "x" << Db);
      CVector v(Da * Db), w(Da * Db);
      for_each_base(T, {i, j}, [&]( std::size_t base ) {
        for ( int a = 0; a < Da; ++a )
          for ( int b = 0; b < Db; ++b )
            v[a * Db + b] = T[base + static_cast<std::size_t>(a) * si + static_cast<std::size_t>(b) * sj];
        w.noalias() = m_dense * v;
        for ( int a = 0; a < Da; ++a )
          for ( int b = 0; b < Db; ++b )
            out[base + static_cast<std::size_t>(a) * si + static_cast<std::size_t>(b) * sj] += w[a * Db + b];
      });
      return out;
    }

    const int da = La.d(), db = Lb.d(), Ga = La.G(), Gb = Lb.G();
    const int bs = da * db;
    // Node-pair blocks, evaluated at this tensor's node values.
    std::vector<CMatrix> blocks;
    if ( !m_identity ) {
      blocks.reserve(static_cast<std::size_t>(Ga * Gb));
      for ( int k = 0; k < Ga; ++k )
        for ( int l = 0; l < Gb; ++l )
          blocks.push_back(block(La.grid().node(k), Lb.grid().node(l), da, db));
    }
    CVector v(bs), w(bs);
    for_each_base(T, {i, j}, [&]( std::size_t base ) {
      for ( int k = 0; k < Ga; ++k )
        for ( int l = 0; l < Gb; ++l ) {
          for ( int a = 0; a < da; ++a )
            for ( int b = 0; b < db; ++b )
              v[a * db + b] = T[base + static_cast<std::size_t>(k * da + a) * si
                                + static_cast<std::size_t>(l * db + b) * sj];
          if ( m_identity )
            w = v;
          else
            w.noalias() = blocks[static_cast<std::size_t>(k * Gb + l)] * v;
          for ( int c = 0; c < da; ++c )
            for ( int e = 0; e < db; ++e ) {
              std::size_t pos = m_swap
                ? base + static_cast<std::size_t>(l * db + e) * si + static_cast<std::size_t>(k * da + c) * sj
                : base + static_cast<std::size_t>(k * da + c) * si + static_cast<std::size_t>(l * db + e) * sj;
              out[pos] += w[c * db + e];
            }
        }
    });
    return out;
  }

  EmbeddedOperator::EmbeddedOperator( TwoLegOperator M, int i, int j, int n )
    : m_op(std::move(M)), m_i(i), m_j(j), m_n(n)
  {
    if ( i == j || i < 0 || j < 0 || i >= n || j >= n )
      RSF_THROW(Structural, "embed_pairwise: legs (" << i << "," << j << ") invalid for rank " << n);
  }

  LeggedTensor EmbeddedOperator::operator()( const LeggedTensor& T ) const
  {
    if ( T.rank() != m_n )
      RSF_THROW(Structural, "embed_pairwise: operator of rank " << m_n << " applied to rank " << T.rank());
    return m_op.apply(T, m_i, m_j);
  }

  EmbeddedOperator embed_pairwise( TwoLegOperator M, int i, int j, int n )
  {
    return EmbeddedOperator(std::move(M), i, j, n);
  }

  //////////////////////////////////////////////////////////////////////////////

  std::vector<LegSpace> expand_groups( const std::vector<LegGroup>& groups )
  {
    std::vector<LegSpace> legs;
    for ( const auto& g : groups )
      for ( int c = 0; c < g.count; ++c )
        legs.push_back(g.space);
    return legs;
  }

  namespace {

    // All non-decreasing tuples of length c over {0..G-1}.
    void multisets( int G, int c, std::vector<int>& cur, std::vector<std::vector<int>>& out )
    {
      if ( static_cast<int>(cur.size()) == c ) {
        out.push_back(cur);
        return;
      }
      int lo = cur.empty() ? 0 : cur.back();
      for ( int k = lo; k < G; ++k ) {
        cur.push_back(k);
        multisets(G, c, cur, out);
        cur.pop_back();
      }
    }

  }

  std::size_t for_each_orbit_block( const std::vector<LegGroup>& groups,
                                    const TensorMap& op,
                                    const std::function<void(const CMatrix&)>& visit )
  {
    const std::size_t ng = groups.size();
    std::vector<std::vector<std::vector<int>>> per_group(ng);
    for ( std::size_t g = 0; g < ng; ++g ) {
      if ( groups[g].count < 0 )
        RSF_THROW(Structural, "for_each_orbit_block: negative leg count");
      std::vector<int> cur;
      multisets(groups[g].space.G(), groups[g].count, cur, per_group[g]);
    }

    std::size_t nblocks = 0;
    std::vector<std::size_t> choice(ng, 0);
    while ( true ) {
      // Sub-grids and local node tuples of this orbit.
      std::vector<LegSpace> legs;
      std::vector<std::vector<std::vector<int>>> arrangements(ng);  // per group: local tuples
      for ( std::size_t g = 0; g < ng; ++g ) {
        const auto& ms = per_group[g][choice[g]];
        std::vector<int> distinct = ms;
        distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
        LegSpace sub(groups[g].space.index_space(), groups[g].space.grid().subgrid(distinct));
        for ( int c = 0; c < groups[g].count; ++c )
          legs.push_back(sub);
        std::vector<int> local;
        for ( int k : ms )
          local.push_back(static_cast<int>(std::lower_bound(distinct.begin(), distinct.end(), k)
                                           - distinct.begin()));
        do {
          arrangements[g].push_back(local);
        } while ( std::next_permutation(local.begin(), local.end()) );
      }
      LeggedTensor proto(legs);

      // Orbit basis: arrangement per group x internal indices per leg.
      std::vector<std::size_t> positions;
      {
        std::vector<std::size_t> ai(ng, 0);
        while ( true ) {
          std::vector<int> nodes;
          for ( std::size_t g = 0; g < ng; ++g )
            for ( int k : arrangements[g][ai[g]] )
              nodes.push_back(k);
          const int n = static_cast<int>(nodes.size());
          std::vector<int> alpha(static_cast<std::size_t>(n), 0);
          while ( true ) {
            std::size_t pos = 0;
            for ( int p = 0; p < n; ++p )
              pos += static_cast<std::size_t>(legs[static_cast<std::size_t>(p)].index(
                       nodes[static_cast<std::size_t>(p)], alpha[static_cast<std::size_t>(p)])) * proto.stride(p);
            positions.push_back(pos);
            int p = n - 1;
            for ( ; p >= 0; --p ) {
              if ( ++alpha[static_cast<std::size_t>(p)] < legs[static_cast<std::size_t>(p)].d() )
                break;
              alpha[static_cast<std::size_t>(p)] = 0;
            }
            if ( p < 0 )
              break;
          }
          std::size_t g = ng;
          for ( ; g-- > 0; ) {
            if ( ++ai[g] < arrangements[g].size() )
              break;
            ai[g] = 0;
          }
          if ( g == static_cast<std::size_t>(-1) )
            break;
        }
      }

      const auto nb = static_cast<Eigen::Index>(positions.size());
      CMatrix block(nb, nb);
      for ( Eigen::Index c = 0; c < nb; ++c ) {
        LeggedTensor e(legs);
        e[positions[static_cast<std::size_t>(c)]] = 1.0;
        LeggedTensor y = op(e);
        if ( !y.same_space(e) )
          RSF_THROW(Structural, "for_each_orbit_block: operator changed the tensor space");
        for ( Eigen::Index r = 0; r < nb; ++r )
          block(r, c) = y[positions[static_cast<std::size_t>(r)]];
      }
      visit(block);
      ++nblocks;

      std::size_t g = ng;
      for ( ; g-- > 0; ) {
        if ( ++choice[g] < per_group[g].size() )
          break;
        choice[g] = 0;
      }
      if ( g == static_cast<std::size_t>(-1) )
        break;
    }
    return nblocks;
  }

  double orbit_operator_norm( const std::vector<LegGroup>& groups, const TensorMap& op )
  {
    double m = 0.0;
    for_each_orbit_block(groups, op, [&m]( const CMatrix& b ) { m = std::max(m, spectral_norm(b)); });
    return m;
  }

  double power_norm_estimate( const std::vector<LegSpace>& legs, const TensorMap& apply,
                              const TensorMap& apply_adj, std::uint64_t seed, int iterations )
  {
    std::mt19937_64 rng(seed);
    LeggedTensor x = random_tensor(legs, rng);
    double nx = x.norm();
    if ( nx == 0.0 )
      return 0.0;
    x *= 1.0 / nx;
    double est = 0.0;
    for ( int it = 0; it < iterations; ++it ) {
      LeggedTensor y = apply(x);
      est = std::max(est, y.norm());
      LeggedTensor z = apply_adj(y);
      double nz = z.norm();
      if ( !std::isfinite(nz) )
        return std::numeric_limits<double>::infinity();
      if ( nz == 0.0 )
        break;
      x = (1.0 / nz) * std::move(z);
    }
    return est;
  }

}
