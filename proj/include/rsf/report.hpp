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

#ifndef RSF_REPORT_HPP
#define RSF_REPORT_HPP

#include "rsf/error.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace rsf {

  // One named residual. Invariant: pass == (status == "pass") and a passing
  // entry always has residual <= tolerance.
  struct ReportEntry {
    std::string axiom;
    double residual = 0.0;
    std::size_t samples = 0;
    double tolerance = 0.0;
    bool pass = false;
    std::string status;  // "pass", "fail", "error" or "skipped"
    std::string note;
    bool operator==( const ReportEntry& ) const = default;
  };

  // pass iff residual <= tolerance (non-finite residuals fail).
  ReportEntry make_entry( std::string axiom, double residual, std::size_t samples,
                          double tolerance, std::string note = {} );
  // A check that could not be evaluated; residual is +infinity.
  ReportEntry error_entry( std::string axiom, const Error& e, double tolerance );
  // A check that does not apply to the model at hand.
  ReportEntry skipped_entry( std::string axiom, std::string reason );

  // One point of a grid-refinement series (for convergence tables).
  struct SeriesPoint {
    std::string axiom;
    int G = 0;
    double residual = 0.0;
    bool operator==( const SeriesPoint& ) const = default;
  };

  struct ValidationReport {
    std::string model_label;
    std::string grid_description;
    std::vector<ReportEntry> entries;
    std::vector<SeriesPoint> series;

    void add( ReportEntry e ) { entries.push_back(std::move(e)); }
    void add( const std::vector<ReportEntry>& es ) { entries.insert(entries.end(), es.begin(), es.end()); }
    // Entries that count as failures; with strict, skipped entries count too.
    std::vector<const ReportEntry*> failures( bool strict = false ) const;
    bool has_status( const std::string& status ) const;
    bool operator==( const ValidationReport& ) const = default;
  };

}

#endif
