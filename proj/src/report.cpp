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

#include "rsf/report.hpp"

#include <cmath>
#include <limits>

namespace rsf {

  ReportEntry make_entry( std::string axiom, double residual, std::size_t samples,
                          double tolerance, std::string note )
  {
    ReportEntry e;
    e.axiom = std::move(axiom);
    e.residual = std::isnan(residual) ? std::numeric_limits<double>::infinity() : residual;
    e.samples = samples;
    e.tolerance = tolerance;
    e.pass = e.residual <= tolerance;
    e.status = e.pass ? "pass" : "fail";
    e.note = std::move(note);
    return e;
  }

  ReportEntry error_entry( std::string axiom, const Error& err, double tolerance )
  {
    ReportEntry e;
    e.axiom = std::move(axiom);
    e.residual = std::numeric_limits<double>::infinity();
    e.tolerance = tolerance;
    e.pass = false;
    e.status = "error";
    e.note = std::string(error_code_name(err.code())) + ": " + err.what();
    return e;
  }

  ReportEntry skipped_entry( std::string axiom, std::string reason )
  {
    ReportEntry e;
    e.axiom = std::move(axiom);
    e.residual = 0.0;
    e.tolerance = 0.0;
    e.pass = false;
    e.status = "skipped";
    e.note = std::move(reason);
    return e;
  }

  std::vector<const ReportEntry*> ValidationReport::failures( bool strict ) const
  {
    std::vector<const ReportEntry*> out;
    for ( const auto& e : entries ) {
      if ( e.status == "fail" || e.status == "error" || (strict && e.status == "skipped") )
        out.push_back(&e);
    }
    return out;
  }

  bool ValidationReport::has_status( const std::string& status ) const
  {
    for ( const auto& e : entries )
      if ( e.status == status )
        return true;
    return false;
  }

}
