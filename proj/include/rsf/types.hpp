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

#ifndef RSF_TYPES_HPP
#define RSF_TYPES_HPP

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <numbers>

namespace rsf {

  using cplx = std::complex<double>;
  using CMatrix = Eigen::MatrixXcd;
  using CVector = Eigen::VectorXcd;

  inline constexpr double pi = std::numbers::pi;
  inline constexpr cplx I_unit{0.0, 1.0};

  // A scalar function on (part of) the complex rapidity strip.
  using ScalarFunction = std::function<cplx(cplx)>;

  // Spectral (operator 2-) norm of a dense matrix; 0 for empty matrices.
  double spectral_norm( const CMatrix& );

}

#endif
