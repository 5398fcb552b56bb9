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

#include "rsf/cli.hpp"

#include "rsf/fock.hpp"
#include "rsf/locality.hpp"
#include "rsf/standard_pair.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <new>
#include <set>
#include <sstream>

namespace rsf::cli {

  using nlohmann::json;
  using ordered_json = nlohmann::ordered_json;

  const std::vector<std::string>& suite_names()
  {
    static const std::vector<std::string> names{"ll", "lr", "fock", "locality", "massive"};
    return names;
  }

  namespace {

    //////////////////////////////////////////////////////////////////////////
    // Schema checking: every problem is collected with its field path.

    class Schema {
    public:
      void error( const std::string& path, const std::string& msg ) { m_issues.push_back({false, path + ": " + msg}); }
      void range( const std::string& path, const std::string& msg ) { m_issues.push_back({true, path + ": " + msg}); }
      bool ok() const noexcept { return m_issues.empty(); }
      std::size_t count() const noexcept { return m_issues.size(); }

      [[noreturn]] void raise( const std::string& source ) const
      {
        const bool only_range = std::all_of(m_issues.begin(), m_issues.end(), []( const Issue& i ) { return i.range; });
        std::ostringstream os;
        os << source << ": " << m_issues.size() << (only_range ? " parameter-range error(s)" : " schema error(s)");
        for ( const auto& i : m_issues )
          os << "\n  " << i.text;
        throw Error(only_range ? ErrorCode::Parameter : ErrorCode::Config, os.str());
      }

      // j must be an object with all required keys; keys outside required +
      // optional are reported. Returns false when j cannot be read further.
      bool object( const json& j, const std::string& path, const std::vector<std::string>& required,
                   const std::vector<std::string>& optional = {} )
      {
        if ( !j.is_object() ) {
          error(path, "expected an object");
          return false;
        }
        bool good = true;
        for ( const auto& [key, value] : j.items() ) {
          if ( std::find(required.begin(), required.end(), key) == required.end()
               && std::find(optional.begin(), optional.end(), key) == optional.end() ) {
            error(join(path, key), "unknown key");
          }
        }
        for ( const auto& key : required ) {
          if ( !j.contains(key) ) {
            error(join(path, key), "missing required key");
            good = false;
          }
        }
        return good;
      }

      std::optional<double> real( const json& j, const std::string& path )
      {
        if ( !j.is_number() ) {
          error(path, "expected a number");
          return std::nullopt;
        }
        const double v = j.get<double>();
        if ( !std::isfinite(v) ) {
          range(path, "must be finite");
          return std::nullopt;
        }
        return v;
      }

      std::optional<long long> integer( const json& j, const std::string& path )
      {
        if ( !j.is_number_integer() ) {
          error(path, "expected an integer");
          return std::nullopt;
        }
        return j.get<long long>();
      }

      std::optional<std::string> string( const json& j, const std::string& path )
      {
        if ( !j.is_string() ) {
          error(path, "expected a string");
          return std::nullopt;
        }
        return j.get<std::string>();
      }

      std::optional<std::vector<double>> reals( const json& j, const std::string& path )
      {
        if ( !j.is_array() ) {
          error(path, "expected a list of numbers");
          return std::nullopt;
        }
        std::vector<double> out;
        bool good = true;
        for ( std::size_t i = 0; i < j.size(); ++i ) {
          if ( auto v = real(j[i], index(path, i)) )
            out.push_back(*v);
          else
            good = false;
        }
        return good ? std::optional(out) : std::nullopt;
      }

      // A number or a pair [re, im].
      std::optional<cplx> complex( const json& j, const std::string& path )
      {
        if ( j.is_number() ) {
          auto v = real(j, path);
          return v ? std::optional(cplx(*v, 0.0)) : std::nullopt;
        }
        if ( j.is_array() && j.size() == 2 ) {
          auto re = real(j[0], index(path, 0)), im = real(j[1], index(path, 1));
          return re && im ? std::optional(cplx(*re, *im)) : std::nullopt;
        }
        error(path, "expected a number or a pair [re, im]");
        return std::nullopt;
      }

      static std::string join( const std::string& path, const std::string& key ) { return path + "." + key; }
      static std::string index( const std::string& path, std::size_t i )
      {
        return path + "[" + std::to_string(i) + "]";
      }

    private:
      struct Issue {
        bool range;
        std::string text;
      };
      std::vector<Issue> m_issues;
    };

    const json& param( const json& params, const char* key )
    {
      return params.at(key);
    }

    // The "params" object of a builder spec (an empty object when absent).
    struct SpecView {
      std::string name;
      json params;
      std::string path;   // path of the params object
    };

    std::optional<SpecView> read_spec( const json& j, const std::string& path, Schema& sc )
    {
      if ( !sc.object(j, path, {"name"}, {"params", "note"}) )
        return std::nullopt;
      auto name = sc.string(j["name"], Schema::join(path, "name"));
      if ( j.contains("note") )
        sc.string(j["note"], Schema::join(path, "note"));
      json params = j.contains("params") ? j["params"] : json::object();
      if ( !name )
        return std::nullopt;
      return SpecView{*name, params, Schema::join(path, "params")};
    }

    std::optional<int> read_sign( const json& j, const std::string& path, Schema& sc )
    {
      auto s = sc.integer(j, path);
      if ( s && *s != 1 && *s != -1 ) {
        sc.range(path, "sign must be +1 or -1");
        return std::nullopt;
      }
      return s ? std::optional(static_cast<int>(*s)) : std::nullopt;
    }

    // Parameters b_k of the sinh family; each must lie in (0, pi).
    std::optional<std::vector<double>> read_blocks( const json& j, const std::string& path, Schema& sc )
    {
      auto b = sc.reals(j, path);
      if ( !b )
        return std::nullopt;
      bool good = true;
      for ( std::size_t k = 0; k < b->size(); ++k ) {
        if ( !((*b)[k] > 0.0 && (*b)[k] < pi) ) {
          std::ostringstream os;
          os.precision(17);
          os << "b = " << (*b)[k] << " is outside the open interval (0, pi)";
          sc.range(Schema::index(path, k), os.str());
          good = false;
        }
      }
      return good ? b : std::nullopt;
    }

    // {"kind": "sinh", "b": [...], "sign": +-1} or {"kind": "constant", "value": c}.
    std::optional<ScalarFunction> read_scalar( const json& j, const std::string& path, Schema& sc )
    {
      if ( !j.is_object() || !j.contains("kind") ) {
        sc.error(path, "expected an object with a \"kind\" key (sinh or constant)");
        return std::nullopt;
      }
      auto kind = sc.string(j["kind"], Schema::join(path, "kind"));
      if ( !kind )
        return std::nullopt;
      if ( *kind == "sinh" ) {
        if ( !sc.object(j, path, {"kind", "b", "sign"}) )
          return std::nullopt;
        auto b = read_blocks(j["b"], Schema::join(path, "b"), sc);
        auto s = read_sign(j["sign"], Schema::join(path, "sign"), sc);
        if ( !b || !s )
          return std::nullopt;
        return sinh_scalar(*b, *s);
      }
      if ( *kind == "constant" ) {
        if ( !sc.object(j, path, {"kind", "value"}) )
          return std::nullopt;
        auto v = sc.complex(j["value"], Schema::join(path, "value"));
        if ( !v )
          return std::nullopt;
        const cplx c = *v;
        return ScalarFunction([c]( cplx ) { return c; });
      }
      sc.error(Schema::join(path, "kind"), "unknown scalar kind \"" + *kind + "\"");
      return std::nullopt;
    }

    // "identity", "flip" (square factors only) or a list of rows.
    std::optional<CMatrix> read_matrix( const json& j, const std::string& path, int n, int d, Schema& sc )
    {
      if ( j.is_string() ) {
        const std::string s = j.get<std::string>();
        if ( s == "identity" )
          return CMatrix(CMatrix::Identity(n, n));
        if ( s == "flip" && d * d == n )
          return flip_matrix(d);
        sc.error(path, "unknown matrix name \"" + s + "\"");
        return std::nullopt;
      }
      if ( !j.is_array() || static_cast<int>(j.size()) != n ) {
        sc.error(path, "expected \"identity\", \"flip\" or " + std::to_string(n) + " rows");
        return std::nullopt;
      }
      CMatrix M(n, n);
      bool good = true;
      for ( int r = 0; r < n; ++r ) {
        const std::string rp = Schema::index(path, static_cast<std::size_t>(r));
        const json& row = j[static_cast<std::size_t>(r)];
        if ( !row.is_array() || static_cast<int>(row.size()) != n ) {
          sc.error(rp, "expected a row of " + std::to_string(n) + " entries");
          good = false;
          continue;
        }
        for ( int c = 0; c < n; ++c ) {
          if ( auto v = sc.complex(row[static_cast<std::size_t>(c)], Schema::index(rp, static_cast<std::size_t>(c))) )
            M(r, c) = *v;
          else
            good = false;
        }
      }
      return good ? std::optional(M) : std::nullopt;
    }

    // row, col and factor of a "perturbed" builder.
    bool read_perturbation( const SpecView& v, int n, int& row, int& col, cplx& factor, Schema& sc )
    {
      auto r = sc.integer(param(v.params, "row"), Schema::join(v.path, "row"));
      auto c = sc.integer(param(v.params, "col"), Schema::join(v.path, "col"));
      auto f = sc.complex(param(v.params, "factor"), Schema::join(v.path, "factor"));
      bool good = r && c && f;
      if ( r && (*r < 0 || *r >= n) ) {
        sc.range(Schema::join(v.path, "row"), "must lie in [0, " + std::to_string(n - 1) + "]");
        good = false;
      }
      if ( c && (*c < 0 || *c >= n) ) {
        sc.range(Schema::join(v.path, "col"), "must lie in [0, " + std::to_string(n - 1) + "]");
        good = false;
      }
      if ( good ) {
        row = static_cast<int>(*r);
        col = static_cast<int>(*c);
        factor = *f;
      }
      return good;
    }

    // Builds a chiral (LL) function. Problems are recorded in sc and yield nullopt.
    std::optional<MatrixScatteringFunction> ll_from_spec( const json& j, const InternalIndexSpace& idx,
                                                          const std::string& path, Schema& sc )
    {
      auto v = read_spec(j, path, sc);
      if ( !v )
        return std::nullopt;
      const int d = idx.dim();
      const json& p = v->params;
      try {
        if ( v->name == "constant_identity" ) {
          if ( !sc.object(p, v->path, {}) )
            return std::nullopt;
          return build_constant_identity(idx);
        }
        if ( v->name == "constant" ) {
          if ( !sc.object(p, v->path, {"matrix"}, {"convention"}) )
            return std::nullopt;
          Convention conv = Convention::R;
          if ( p.contains("convention") ) {
            auto c = sc.string(p["convention"], Schema::join(v->path, "convention"));
            if ( !c )
              return std::nullopt;
            if ( *c == "S" )
              conv = Convention::S;
            else if ( *c != "R" ) {
              sc.error(Schema::join(v->path, "convention"), "must be \"S\" or \"R\"");
              return std::nullopt;
            }
          }
          auto M = read_matrix(p["matrix"], Schema::join(v->path, "matrix"), d * d, d, sc);
          if ( !M )
            return std::nullopt;
          return build_constant(*M, idx, conv, "constant");
        }
        if ( v->name == "sinh" || v->name == "sinh_identity" ) {
          if ( !sc.object(p, v->path, {"b", "sign"}) )
            return std::nullopt;
          auto b = read_blocks(p["b"], Schema::join(v->path, "b"), sc);
          auto s = read_sign(p["sign"], Schema::join(v->path, "sign"), sc);
          if ( v->name == "sinh" && d != 1 ) {
            sc.error(Schema::join(path, "name"), "builder \"sinh\" needs dim 1 (use \"sinh_identity\")");
            return std::nullopt;
          }
          if ( !b || !s )
            return std::nullopt;
          return v->name == "sinh" ? build_scalar_family(*b, *s) : build_sinh_identity(idx, *b, *s);
        }
        if ( v->name == "diagonal" ) {
          if ( !sc.object(p, v->path, {"entries"}) )
            return std::nullopt;
          const json& e = p["entries"];
          const std::string ep = Schema::join(v->path, "entries");
          if ( !e.is_array() || static_cast<int>(e.size()) != d ) {
            sc.error(ep, "expected " + std::to_string(d) + " rows of scalar functions");
            return std::nullopt;
          }
          std::vector<std::vector<ScalarFunction>> eps(static_cast<std::size_t>(d));
          bool good = true;
          for ( std::size_t a = 0; a < static_cast<std::size_t>(d); ++a ) {
            if ( !e[a].is_array() || static_cast<int>(e[a].size()) != d ) {
              sc.error(Schema::index(ep, a), "expected " + std::to_string(d) + " scalar functions");
              good = false;
              continue;
            }
            for ( std::size_t b = 0; b < static_cast<std::size_t>(d); ++b ) {
              auto s = read_scalar(e[a][b], Schema::index(Schema::index(ep, a), b), sc);
              if ( s )
                eps[a].push_back(*s);
              else
                good = false;
            }
          }
          if ( !good )
            return std::nullopt;
          return build_diagonal_family(idx, std::move(eps), "diagonal");
        }
        if ( v->name == "on_template" ) {
          if ( !sc.object(p, v->path, {"s1", "s2", "s3"}) )
            return std::nullopt;
          auto s1 = read_scalar(p["s1"], Schema::join(v->path, "s1"), sc);
          auto s2 = read_scalar(p["s2"], Schema::join(v->path, "s2"), sc);
          auto s3 = read_scalar(p["s3"], Schema::join(v->path, "s3"), sc);
          if ( !s1 || !s2 || !s3 )
            return std::nullopt;
          return build_on_template(idx, *s1, *s2, *s3);
        }
        if ( v->name == "rotated" ) {
          if ( !sc.object(p, v->path, {"base", "angle"}) )
            return std::nullopt;
          if ( d != 2 ) {
            sc.error(Schema::join(path, "name"), "builder \"rotated\" needs dim 2");
            return std::nullopt;
          }
          auto base = ll_from_spec(p["base"], idx, Schema::join(v->path, "base"), sc);
          auto angle = sc.real(p["angle"], Schema::join(v->path, "angle"));
          if ( !base || !angle )
            return std::nullopt;
          CMatrix V(2, 2);
          V << std::cos(*angle), -std::sin(*angle), std::sin(*angle), std::cos(*angle);
          return build_rotated(*base, V);
        }
        if ( v->name == "perturbed" ) {
          if ( !sc.object(p, v->path, {"base", "row", "col", "factor"}) )
            return std::nullopt;
          auto base = ll_from_spec(p["base"], idx, Schema::join(v->path, "base"), sc);
          int row = 0, col = 0;
          cplx factor;
          if ( !read_perturbation(*v, d * d, row, col, factor, sc) || !base )
            return std::nullopt;
          return perturb_entry(*base, row, col, factor);
        }
      } catch ( const Error& e ) {
        sc.error(path, e.what());
        return std::nullopt;
      }
      sc.error(Schema::join(path, "name"), "unknown builder \"" + v->name + "\"");
      return std::nullopt;
    }

    MatrixScatteringFunction identity_lr( const InternalIndexSpace& plus, const InternalIndexSpace& minus )
    {
      const int n = plus.dim() * minus.dim();
      return MatrixScatteringFunction::left_right(plus, minus, [n]( cplx ) -> CMatrix {
        return CMatrix::Identity(n, n);
      }, "identity_lr");
    }

    // Builds (construct = true) or only validates the LR function.
    std::optional<MatrixScatteringFunction> lr_from_spec( const json& j, const ModelDocument& doc,
                                                          const std::string& path, Schema& sc, bool construct )
    {
      auto v = read_spec(j, path, sc);
      if ( !v )
        return std::nullopt;
      const InternalIndexSpace plus(doc.plus().dim, doc.plus().bar);
      const InternalIndexSpace minus(doc.minus().dim, doc.minus().bar);
      const int n = plus.dim() * minus.dim();
      const json& p = v->params;
      try {
        if ( v->name == "identity" ) {
          if ( !sc.object(p, v->path, {}) )
            return std::nullopt;
          return identity_lr(plus, minus);
        }
        if ( v->name == "flip" ) {
          if ( !sc.object(p, v->path, {"from"}) )
            return std::nullopt;
          auto from = sc.string(p["from"], Schema::join(v->path, "from"));
          if ( !from )
            return std::nullopt;
          auto it = std::find_if(doc.sides.begin(), doc.sides.end(),
                                 [&]( const SideSpec& s ) { return s.name == *from; });
          if ( it == doc.sides.end() ) {
            sc.error(Schema::join(v->path, "from"), "no side named \"" + *from + "\"");
            return std::nullopt;
          }
          if ( !(plus == minus) || it->dim != plus.dim() ) {
            sc.error(Schema::join(path, "name"), "builder \"flip\" needs equal index spaces on both sides");
            return std::nullopt;
          }
          if ( !construct )
            return std::nullopt;
          return build_flip_lr(build_side(*it), side_grid(*it), doc.tol);
        }
        if ( v->name == "constant" ) {
          if ( !sc.object(p, v->path, {"matrix"}) )
            return std::nullopt;
          auto M = read_matrix(p["matrix"], Schema::join(v->path, "matrix"), n, plus.dim() == minus.dim() ? plus.dim() : 0, sc);
          if ( !M )
            return std::nullopt;
          const CMatrix m = *M;
          return MatrixScatteringFunction::left_right(plus, minus, [m]( cplx ) { return m; }, "constant_lr");
        }
        if ( v->name == "perturbed" ) {
          if ( !sc.object(p, v->path, {"base", "row", "col", "factor"}) )
            return std::nullopt;
          auto base = lr_from_spec(p["base"], doc, Schema::join(v->path, "base"), sc, construct);
          int row = 0, col = 0;
          cplx factor;
          if ( !read_perturbation(*v, n, row, col, factor, sc) || !base )
            return std::nullopt;
          return perturb_entry(*base, row, col, factor);
        }
      } catch ( const Error& e ) {
        if ( !construct )
          sc.error(path, e.what());
        else
          throw;
        return std::nullopt;
      }
      sc.error(Schema::join(path, "name"), "unknown LR builder \"" + v->name + "\"");
      return std::nullopt;
    }

    BuilderSpec to_builder_spec( const json& j )
    {
      BuilderSpec b;
      b.name = j.at("name").get<std::string>();
      if ( j.contains("params") )
        b.params = j["params"];
      if ( j.contains("note") )
        b.note = j["note"].get<std::string>();
      return b;
    }

    json from_builder_spec( const BuilderSpec& b )
    {
      json j{{"name", b.name}, {"params", b.params}};
      if ( !b.note.empty() )
        j["note"] = b.note;
      return j;
    }

    std::vector<std::string> expand_suite( const std::string& s )
    {
      if ( s == "all" )
        return suite_names();
      return {s};
    }

    bool known_suite( const std::string& s )
    {
      return s == "all" || std::find(suite_names().begin(), suite_names().end(), s) != suite_names().end();
    }

    void parse_sides( const json& j, ModelDocument& doc, Schema& sc )
    {
      const std::string path = "$.sides";
      if ( !j.is_array() || j.empty() || j.size() > 2 ) {
        sc.error(path, "expected a list of one or two sides");
        return;
      }
      std::set<std::string> names;
      for ( std::size_t i = 0; i < j.size(); ++i ) {
        const std::string sp = Schema::index(path, i);
        const json& s = j[i];
        if ( !sc.object(s, sp, {"name", "dim", "builder"}, {"bar", "grid", "masses"}) )
          continue;
        SideSpec side;
        if ( auto n = sc.string(s["name"], Schema::join(sp, "name")) ) {
          side.name = *n;
          if ( side.name.empty() )
            sc.error(Schema::join(sp, "name"), "must not be empty");
          else if ( !names.insert(side.name).second )
            sc.error(Schema::join(sp, "name"), "duplicate side name \"" + side.name + "\"");
        }
        auto dim = sc.integer(s["dim"], Schema::join(sp, "dim"));
        if ( !dim )
          continue;
        if ( *dim < 1 || *dim > 8 ) {
          sc.range(Schema::join(sp, "dim"), "must lie in [1, 8]");
          continue;
        }
        side.dim = static_cast<int>(*dim);
        side.bar.resize(static_cast<std::size_t>(side.dim));
        for ( int a = 0; a < side.dim; ++a )
          side.bar[static_cast<std::size_t>(a)] = a;
        if ( s.contains("bar") ) {
          const std::string bp = Schema::join(sp, "bar");
          const json& b = s["bar"];
          if ( !b.is_array() || static_cast<int>(b.size()) != side.dim ) {
            sc.error(bp, "expected " + std::to_string(side.dim) + " indices (1-based)");
            continue;
          }
          bool good = true;
          for ( std::size_t a = 0; a < b.size(); ++a ) {
            auto v = sc.integer(b[a], Schema::index(bp, a));
            if ( !v || *v < 1 || *v > side.dim ) {
              if ( v )
                sc.error(Schema::index(bp, a), "index out of range 1.." + std::to_string(side.dim));
              good = false;
              continue;
            }
            side.bar[a] = static_cast<int>(*v) - 1;
          }
          if ( !good )
            continue;
          for ( int a = 0; a < side.dim; ++a ) {
            if ( side.bar[static_cast<std::size_t>(side.bar[static_cast<std::size_t>(a)])] != a ) {
              sc.error(bp, "not an involution");
              good = false;
              break;
            }
          }
          if ( !good )
            continue;
        }
        if ( s.contains("grid") ) {
          const std::string gp = Schema::join(sp, "grid");
          if ( sc.object(s["grid"], gp, {}, {"G", "qmax"}) ) {
            if ( s["grid"].contains("G") ) {
              if ( auto G = sc.integer(s["grid"]["G"], Schema::join(gp, "G")) ) {
                if ( *G < 2 || *G > 65536 )
                  sc.range(Schema::join(gp, "G"), "must lie in [2, 65536]");
                else
                  side.grid.G = static_cast<int>(*G);
              }
            }
            if ( s["grid"].contains("qmax") ) {
              if ( auto q = sc.real(s["grid"]["qmax"], Schema::join(gp, "qmax")) ) {
                if ( !(*q > 0.0) )
                  sc.range(Schema::join(gp, "qmax"), "must be positive");
                else
                  side.grid.qmax = *q;
              }
            }
          }
        }
        if ( s.contains("masses") ) {
          const std::string mp = Schema::join(sp, "masses");
          if ( auto m = sc.reals(s["masses"], mp) ) {
            if ( static_cast<int>(m->size()) != side.dim )
              sc.error(mp, "expected " + std::to_string(side.dim) + " masses");
            for ( std::size_t a = 0; a < m->size(); ++a )
              if ( !((*m)[a] > 0.0) )
                sc.range(Schema::index(mp, a), "masses must be positive");
            side.masses = *m;
          }
        }
        const InternalIndexSpace idx(side.dim, side.bar);
        if ( ll_from_spec(s["builder"], idx, Schema::join(sp, "builder"), sc) )
          side.builder = to_builder_spec(s["builder"]);
        doc.sides.push_back(std::move(side));
      }
    }

    void parse_top( const json& j, ModelDocument& doc, Schema& sc )
    {
      if ( !sc.object(j, "$", {"schema_version", "label", "sides"},
                      {"lr", "suites", "tolerances", "nmax", "seed", "output", "note"}) )
        return;
      if ( auto v = sc.integer(j["schema_version"], "$.schema_version") ) {
        if ( *v != schema_version )
          sc.error("$.schema_version", "unsupported version " + std::to_string(*v) + " (expected "
                                         + std::to_string(schema_version) + ")");
      }
      if ( auto l = sc.string(j["label"], "$.label") )
        doc.label = *l;
      if ( j.contains("note") )
        sc.string(j["note"], "$.note");
      const std::size_t before = sc.count();
      parse_sides(j["sides"], doc, sc);
      const bool sides_ok = sc.count() == before && !doc.sides.empty();
      if ( j.contains("lr") ) {
        if ( sides_ok ) {
          lr_from_spec(j["lr"], doc, "$.lr", sc, false);
          if ( j["lr"].is_object() && j["lr"].contains("name") && j["lr"]["name"].is_string() )
            doc.lr = to_builder_spec(j["lr"]);
        } else {
          read_spec(j["lr"], "$.lr", sc);
        }
      }
      doc.suites = suite_names();
      if ( j.contains("suites") ) {
        const json& s = j["suites"];
        if ( !s.is_array() || s.empty() ) {
          sc.error("$.suites", "expected a non-empty list of suite names");
        } else {
          std::vector<std::string> chosen;
          for ( std::size_t i = 0; i < s.size(); ++i ) {
            auto name = sc.string(s[i], Schema::index("$.suites", i));
            if ( !name )
              continue;
            if ( !known_suite(*name) ) {
              sc.error(Schema::index("$.suites", i), "unknown suite \"" + *name + "\"");
              continue;
            }
            for ( const auto& e : expand_suite(*name) )
              if ( std::find(chosen.begin(), chosen.end(), e) == chosen.end() )
                chosen.push_back(e);
          }
          doc.suites.clear();
          for ( const auto& n : suite_names() )
            if ( std::find(chosen.begin(), chosen.end(), n) != chosen.end() )
              doc.suites.push_back(n);
        }
      }
      if ( j.contains("tolerances") ) {
        const json& t = j["tolerances"];
        if ( sc.object(t, "$.tolerances", {}, {"algebraic", "quadrature", "commutation", "locality"}) ) {
          auto read_tol = [&]( const char* key, double& out ) {
            if ( !t.contains(key) )
              return;
            const std::string p = Schema::join("$.tolerances", key);
            if ( auto v = sc.real(t[key], p) ) {
              if ( !(*v > 0.0) )
                sc.range(p, "must be positive");
              else
                out = *v;
            }
          };
          read_tol("algebraic", doc.tol.algebraic);
          read_tol("quadrature", doc.tol.quadrature);
          read_tol("commutation", doc.commutation_tol);
          read_tol("locality", doc.locality_tol);
        }
      }
      if ( j.contains("nmax") ) {
        if ( auto n = sc.integer(j["nmax"], "$.nmax") ) {
          if ( *n < 1 || *n > 6 )
            sc.range("$.nmax", "must lie in [1, 6]");
          else
            doc.nmax = static_cast<int>(*n);
        }
      }
      if ( j.contains("seed") ) {
        if ( auto s = sc.integer(j["seed"], "$.seed") ) {
          if ( *s < 0 )
            sc.range("$.seed", "must be non-negative");
          else
            doc.seed = static_cast<std::uint64_t>(*s);
        }
      }
      if ( j.contains("output") ) {
        const json& o = j["output"];
        if ( sc.object(o, "$.output", {}, {"report", "csv"}) ) {
          if ( o.contains("report") )
            if ( auto r = sc.string(o["report"], "$.output.report") )
              doc.report_path = *r;
          if ( o.contains("csv") )
            if ( auto c = sc.string(o["csv"], "$.output.csv") )
              doc.csv_path = *c;
        }
      }
    }

    std::string read_file( const std::string& path )
    {
      std::ifstream in(path, std::ios::binary);
      if ( !in )
        RSF_THROW(Io, path << ": cannot open file for reading");
      std::ostringstream os;
      os << in.rdbuf();
      if ( in.bad() )
        RSF_THROW(Io, path << ": read error");
      return os.str();
    }

    // Line and column of a byte offset.
    std::pair<std::size_t, std::size_t> line_column( const std::string& text, std::size_t byte )
    {
      std::size_t line = 1, col = 1;
      for ( std::size_t i = 0; i < std::min(byte, text.size()); ++i ) {
        if ( text[i] == '\n' ) {
          ++line;
          col = 1;
        } else {
          ++col;
        }
      }
      return {line, col};
    }

    //////////////////////////////////////////////////////////////////////////
    // Suite helpers.

    struct BuiltSide {
      const SideSpec* spec;
      MatrixScatteringFunction R;
      RapidityGrid grid;
    };

    template <class F>
    void guarded( ValidationReport& rep, const std::string& axiom, double tol, F&& run )
    {
      try {
        run();
      } catch ( const Error& e ) {
        rep.add(error_entry(axiom, e, tol));
      } catch ( const std::bad_alloc& ) {
        rep.add(error_entry(axiom, Error(ErrorCode::Capacity, "out of memory"), tol));
      }
    }

    void add_prefixed( ValidationReport& rep, const std::string& prefix, std::vector<ReportEntry> entries )
    {
      for ( auto& e : entries ) {
        e.axiom = prefix + e.axiom;
        rep.add(std::move(e));
      }
    }

    LeggedTensor gaussian_probe( const LegSpace& leg )
    {
      LeggedTensor h({leg});
      for ( int k = 0; k < leg.G(); ++k ) {
        const double q = leg.grid().node(k);
        for ( int a = 0; a < leg.d(); ++a )
          h[static_cast<std::size_t>(leg.index(k, a))] = cplx(std::exp(-0.5 * q * q), 0.2 * a);
      }
      h *= cplx(1.0 / h.norm());
      return h;
    }

    AssemblyConfig assembly_config( const ModelDocument& doc )
    {
      AssemblyConfig cfg;
      cfg.tol = doc.tol;
      cfg.commutation_tol = doc.commutation_tol;
      cfg.locality_tol = doc.locality_tol;
      cfg.seed = doc.seed;
      return cfg;
    }

    ChiralSide chiral( const BuiltSide& s, int nmax, bool with_masses )
    {
      ChiralSide c{s.R, s.grid, nmax, {}};
      if ( with_masses )
        c.masses = s.spec->masses;
      return c;
    }

    void run_ll( ValidationReport& rep, const ModelDocument& doc, const std::vector<BuiltSide>& sides )
    {
      for ( const auto& s : sides ) {
        const std::string prefix = s.spec->name + ".ll.";
        guarded(rep, prefix + "suite", doc.tol.algebraic, [&] {
          add_prefixed(rep, prefix, ll_suite(s.R, s.grid, doc.tol));
        });
      }
    }

    void run_lr( ValidationReport& rep, const ModelDocument& doc, const std::vector<BuiltSide>& sides )
    {
      if ( !doc.lr ) {
        rep.add(skipped_entry("lr", "the model has no LR function"));
        return;
      }
      const BuiltSide& p = sides.front();
      const BuiltSide& m = sides.back();
      guarded(rep, "lr.build", doc.tol.algebraic, [&] {
        const MatrixScatteringFunction S = *build_lr(doc);
        add_prefixed(rep, "lr.", lr_suite(p.R, S, m.R, p.grid, doc.tol));
        AssemblyConfig cfg = assembly_config(doc);
        cfg.locality = false;
        const auto bundle = TripleBundle::massless(chiral(p, doc.nmax, false), chiral(m, doc.nmax, false), S);
        rep.add(assemble_massless(bundle, cfg).entries);
      });
    }

    void run_fock( ValidationReport& rep, const ModelDocument& doc, const std::vector<BuiltSide>& sides )
    {
      const AssemblyConfig cfg = assembly_config(doc);
      for ( const auto& s : sides ) {
        const std::string prefix = s.spec->name + ".fock.";
        // Pointwise identities: exact orbit norms on a small Gauss-Legendre grid.
        guarded(rep, prefix + "projector", doc.commutation_tol, [&] {
          const RapidityGrid g = RapidityGrid::gauss_legendre(cfg.algebraic_nodes, s.grid.qmax());
          const BraidingData B = braiding(s.R, g, doc.tol);
          const std::size_t samples = static_cast<std::size_t>(g.size());
          for ( int n = 1; n <= std::min(doc.nmax, 3); ++n ) {
            const std::string lv = ".n" + std::to_string(n);
            rep.add(make_entry(prefix + "projector.idempotency" + lv, projector_idempotency_residual(B, n), samples,
                               doc.commutation_tol));
            rep.add(make_entry(prefix + "projector.selfadjoint" + lv, projector_selfadjoint_residual(B, n), samples,
                               doc.commutation_tol));
            rep.add(make_entry(prefix + "flip_product" + lv, flip_product_identity_check(B, n), samples,
                               doc.commutation_tol));
          }
          rep.add(make_entry(prefix + "braid_relation", braid_relation_residual(B), samples, doc.tol.algebraic));
        });
        // Particle bounds on the full grid.
        guarded(rep, prefix + "particle_bounds", 1e-12, [&] {
          const BraidingData B = braiding(s.R, s.grid, doc.tol);
          const LeggedTensor f = gaussian_probe(B.leg());
          ReportEntry e = check_particle_bounds(B, f, 100, doc.nmax, doc.seed);
          e.axiom = prefix + "particle_bounds";
          rep.add(std::move(e));
          const FockVector vac = FockVector::vacuum(B.leg(), doc.nmax);
          const double lhs = create(B, f, vac).norm(), rhs = f.norm() * vac.number_weighted_norm(1.0);
          rep.add(make_entry(prefix + "particle_bounds.vacuum_equality", std::abs(lhs - rhs) / rhs, 1, 1e-12));
        });
      }
    }

    void run_locality( ValidationReport& rep, const ModelDocument& doc, const std::vector<BuiltSide>& sides )
    {
      const AssemblyConfig cfg = assembly_config(doc);
      for ( const auto& s : sides ) {
        const std::string name = s.spec->name + ".locality.field";
        const int G = s.grid.size();
        guarded(rep, name, doc.locality_tol, [&] {
          const InternalIndexSpace idx = s.R.index_space();
          const auto [f, g] = default_locality_pair(idx, cfg);
          std::vector<int> sizes{G};
          if ( G % 16 == 0 )
            sizes.insert(sizes.begin(), G / 2);
          const auto runs = field_locality_series(s.R, f, g, sizes, s.grid.qmax());
          for ( const auto& r : runs )
            rep.series.push_back({name, r.G, r.residual});
          const LocalityRun& last = runs.back();
          rep.add(make_entry(name, last.residual, 2, doc.locality_tol, "normalized by ||f|| ||g|| ||(N+1) Psi||"));
          rep.add(make_entry(name + ".route", last.route_residual, 2, doc.commutation_tol,
                             "composition versus closed-form A - A*"));
          if ( runs.size() == 2 )
            rep.add(make_entry(name + ".convergence", last.residual / runs.front().residual, 2, 1.0 / 3.0,
                               "ratio r(G) / r(G/2)"));
          // Left-supported negative control: the residual must stay large.
          std::vector<TestFunction> left(static_cast<std::size_t>(idx.dim()), TestFunction::bump(-0.6, 0.5));
          const LocalizedVector fc = localized_transform(idx, left);
          const auto control = field_locality_series(s.R, fc, g, {G}, s.grid.qmax(), true);
          const double threshold = 1e-2;
          rep.add(make_entry(name + ".control", threshold / control.back().residual, 1, 1.0,
                             "left-supported f; margin 1e-2 / residual"));
        });
      }
      if ( doc.lr ) {
        guarded(rep, "twisted_commutator", doc.locality_tol, [&] {
          const MatrixScatteringFunction S = *build_lr(doc);
          AssemblyConfig c = cfg;
          c.structure = false;
          const auto bundle = TripleBundle::massless(chiral(sides.front(), doc.nmax, false),
                                                     chiral(sides.back(), doc.nmax, false), S);
          const ValidationReport r = assemble_massless(bundle, c);
          rep.add(r.entries);
          rep.series.insert(rep.series.end(), r.series.begin(), r.series.end());
        });
      }
    }

    void run_massive( ValidationReport& rep, const ModelDocument& doc, const std::vector<BuiltSide>& sides )
    {
      if ( doc.plus().masses.empty() ) {
        rep.add(skipped_entry("massive", "the model has no masses"));
        return;
      }
      guarded(rep, "massive", doc.tol.algebraic, [&] {
        std::optional<MatrixScatteringFunction> S;
        if ( doc.lr )
          S = build_lr(doc);
        const auto bundle = TripleBundle::massive(chiral(sides.front(), doc.nmax, true),
                                                  chiral(sides.back(), doc.nmax, true), S);
        rep.add(assemble_massive(bundle, assembly_config(doc)).entries);
      });
    }

    // Residuals as JSON values (strings for non-finite numbers).
    ordered_json number_json( double v )
    {
      if ( std::isnan(v) )
        return "nan";
      if ( std::isinf(v) )
        return v > 0 ? "inf" : "-inf";
      return v;
    }

    double number_from_json( const json& j, const std::string& path )
    {
      if ( j.is_number() )
        return j.get<double>();
      if ( j.is_string() ) {
        const std::string s = j.get<std::string>();
        if ( s == "inf" )
          return std::numeric_limits<double>::infinity();
        if ( s == "-inf" )
          return -std::numeric_limits<double>::infinity();
        if ( s == "nan" )
          return std::numeric_limits<double>::quiet_NaN();
      }
      RSF_THROW(Config, "report: " << path << ": expected a number");
    }

    std::string format_short( double v )
    {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.3e", v);
      return buf;
    }

    std::string format17( double v )
    {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.17g", v);
      return buf;
    }

    bool is_capacity_error( const ReportEntry& e )
    {
      return e.status == "error" && e.note.rfind(error_code_name(ErrorCode::Capacity), 0) == 0;
    }

  }

  ModelDocument parse_model_text( const std::string& text, const std::string& source )
  {
    json j;
    try {
      j = json::parse(text);
    } catch ( const json::parse_error& e ) {
      const auto [line, col] = line_column(text, e.byte > 0 ? e.byte - 1 : 0);
      RSF_THROW(Config, source << ":" << line << ":" << col << ": JSON syntax error: " << e.what());
    }
    ModelDocument doc;
    Schema sc;
    parse_top(j, doc, sc);
    if ( !sc.ok() )
      sc.raise(source);
    return doc;
  }

  ModelDocument parse_model( const std::string& path )
  {
    return parse_model_text(read_file(path), path);
  }

  void apply_overrides( ModelDocument& doc, const Overrides& o )
  {
    if ( o.suite ) {
      if ( !known_suite(*o.suite) )
        RSF_THROW(Config, "--suite: unknown suite \"" << *o.suite << "\" (ll, lr, fock, locality, massive or all)");
      doc.suites = expand_suite(*o.suite);
    }
    if ( o.nmax ) {
      if ( *o.nmax < 1 || *o.nmax > 6 )
        RSF_THROW(Config, "--nmax: must lie in [1, 6]");
      doc.nmax = *o.nmax;
    }
    for ( auto& s : doc.sides ) {
      if ( o.grid ) {
        if ( *o.grid < 2 || *o.grid > 65536 )
          RSF_THROW(Config, "--grid: must lie in [2, 65536]");
        s.grid.G = *o.grid;
      }
      if ( o.qmax ) {
        if ( !(*o.qmax > 0.0) || !std::isfinite(*o.qmax) )
          RSF_THROW(Config, "--qmax: must be positive");
        s.grid.qmax = *o.qmax;
      }
    }
    auto positive = []( double v, const char* flag ) {
      if ( !(v > 0.0) || !std::isfinite(v) )
        RSF_THROW(Config, flag << ": must be positive");
      return v;
    };
    if ( o.tol_algebraic )
      doc.tol.algebraic = positive(*o.tol_algebraic, "--tol-algebraic");
    if ( o.tol_quadrature )
      doc.tol.quadrature = positive(*o.tol_quadrature, "--tol-quadrature");
    if ( o.seed )
      doc.seed = *o.seed;
    if ( o.report_path )
      doc.report_path = *o.report_path;
    if ( o.csv_path )
      doc.csv_path = *o.csv_path;
  }

  MatrixScatteringFunction build_side( const SideSpec& side )
  {
    Schema sc;
    auto R = ll_from_spec(from_builder_spec(side.builder), InternalIndexSpace(side.dim, side.bar), "builder", sc);
    if ( !sc.ok() || !R )
      sc.raise("side " + side.name);
    return *R;
  }

  RapidityGrid side_grid( const SideSpec& side )
  {
    return RapidityGrid::gauss_legendre(side.grid.G, side.grid.qmax);
  }

  std::optional<MatrixScatteringFunction> build_lr( const ModelDocument& doc )
  {
    if ( !doc.lr )
      return std::nullopt;
    Schema sc;
    auto S = lr_from_spec(from_builder_spec(*doc.lr), doc, "lr", sc, true);
    if ( !sc.ok() || !S )
      sc.raise("lr");
    return S;
  }

  ValidationReport run_suite( const ModelDocument& doc )
  {
    if ( doc.sides.empty() )
      RSF_THROW(Config, "run_suite: the document has no sides");
    ValidationReport rep;
    rep.model_label = doc.label;
    std::vector<BuiltSide> sides;
    for ( const auto& s : doc.sides ) {
      sides.push_back({&s, build_side(s), side_grid(s)});
      if ( !rep.grid_description.empty() )
        rep.grid_description += "; ";
      rep.grid_description += s.name + ": " + sides.back().grid.describe();
    }
    auto selected = [&]( const char* name ) {
      return std::find(doc.suites.begin(), doc.suites.end(), name) != doc.suites.end();
    };
    if ( selected("ll") )
      run_ll(rep, doc, sides);
    if ( selected("lr") )
      run_lr(rep, doc, sides);
    if ( selected("fock") )
      run_fock(rep, doc, sides);
    if ( selected("locality") )
      run_locality(rep, doc, sides);
    if ( selected("massive") )
      run_massive(rep, doc, sides);
    return rep;
  }

  int exit_status( const ValidationReport& report, bool strict )
  {
    bool capacity = false;
    for ( const ReportEntry* e : report.failures(strict) ) {
      if ( is_capacity_error(*e) )
        capacity = true;
      else
        return 1;
    }
    return capacity ? 3 : 0;
  }

  std::string report_text( const ValidationReport& report, bool strict )
  {
    std::ostringstream os;
    os << "model: " << report.model_label << "\n";
    os << "grid:  " << report.grid_description << "\n";
    std::map<std::string, int> counts;
    for ( const auto& e : report.entries ) {
      std::string tag = e.status;
      std::transform(tag.begin(), tag.end(), tag.begin(), ::toupper);
      os << tag << std::string(8 - std::min<std::size_t>(7, tag.size()), ' ') << e.axiom << "  residual="
         << format_short(e.residual) << "  tolerance=" << format_short(e.tolerance) << "  samples=" << e.samples;
      if ( !e.note.empty() )
        os << "  (" << e.note << ")";
      os << "\n";
      ++counts[e.status];
    }
    os << "summary: " << report.entries.size() << " entries, " << counts["pass"] << " pass, " << counts["fail"]
       << " fail, " << counts["error"] << " error, " << counts["skipped"] << " skipped\n";
    const auto failures = report.failures(strict);
    if ( !failures.empty() ) {
      os << "failing entries:\n";
      for ( const ReportEntry* e : failures ) {
        os << "  " << e->axiom << ": ";
        if ( e->status == "fail" )
          os << "residual " << format_short(e->residual) << " > tolerance " << format_short(e->tolerance) << "\n";
        else
          os << e->status << " (" << e->note << ")\n";
      }
    }
    return os.str();
  }

  std::string report_json( const ValidationReport& report )
  {
    ordered_json j;
    j["model_label"] = report.model_label;
    j["grid_description"] = report.grid_description;
    j["entries"] = ordered_json::array();
    for ( const auto& e : report.entries ) {
      ordered_json x;
      x["axiom"] = e.axiom;
      x["residual"] = number_json(e.residual);
      x["samples"] = e.samples;
      x["tolerance"] = number_json(e.tolerance);
      x["pass"] = e.pass;
      x["status"] = e.status;
      x["note"] = e.note;
      j["entries"].push_back(std::move(x));
    }
    j["series"] = ordered_json::array();
    for ( const auto& p : report.series ) {
      ordered_json x;
      x["axiom"] = p.axiom;
      x["G"] = p.G;
      x["residual"] = number_json(p.residual);
      j["series"].push_back(std::move(x));
    }
    return j.dump(2) + "\n";
  }

  ValidationReport parse_report_json( const std::string& text )
  {
    json j;
    try {
      j = json::parse(text);
    } catch ( const json::parse_error& e ) {
      RSF_THROW(Config, "report: JSON syntax error: " << e.what());
    }
    Schema sc;
    ValidationReport rep;
    if ( sc.object(j, "$", {"model_label", "grid_description", "entries", "series"}) ) {
      try {
        rep.model_label = j["model_label"].get<std::string>();
        rep.grid_description = j["grid_description"].get<std::string>();
        for ( std::size_t i = 0; i < j["entries"].size(); ++i ) {
          const json& x = j["entries"][i];
          const std::string p = Schema::index("$.entries", i);
          if ( !sc.object(x, p, {"axiom", "residual", "samples", "tolerance", "pass", "status", "note"}) )
            continue;
          ReportEntry e;
          e.axiom = x["axiom"].get<std::string>();
          e.residual = number_from_json(x["residual"], p + ".residual");
          e.samples = x["samples"].get<std::size_t>();
          e.tolerance = number_from_json(x["tolerance"], p + ".tolerance");
          e.pass = x["pass"].get<bool>();
          e.status = x["status"].get<std::string>();
          e.note = x["note"].get<std::string>();
          rep.entries.push_back(std::move(e));
        }
        for ( std::size_t i = 0; i < j["series"].size(); ++i ) {
          const json& x = j["series"][i];
          const std::string p = Schema::index("$.series", i);
          if ( !sc.object(x, p, {"axiom", "G", "residual"}) )
            continue;
          rep.series.push_back({x["axiom"].get<std::string>(), x["G"].get<int>(),
                                number_from_json(x["residual"], p + ".residual")});
        }
      } catch ( const json::exception& e ) {
        sc.error("$", e.what());
      }
    }
    if ( !sc.ok() )
      sc.raise("report");
    return rep;
  }

  std::string report_csv( const ValidationReport& report )
  {
    std::string out = "axiom,G,residual\n";
    for ( const auto& p : report.series )
      out += p.axiom + "," + std::to_string(p.G) + "," + format17(p.residual) + "\n";
    return out;
  }

  void write_text_file( const std::string& path, const std::string& content )
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if ( !out )
      RSF_THROW(Io, path << ": cannot open file for writing");
    out << content;
    out.flush();
    if ( !out )
      RSF_THROW(Io, path << ": write error");
  }

}
