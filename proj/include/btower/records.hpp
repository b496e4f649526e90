#ifndef BTOWER_RECORDS_HPP
#define BTOWER_RECORDS_HPP

#include "btower/radial_solver.hpp"
#include "btower/reduced_energy.hpp"

#include <string>

namespace btower {

// key=value lines, matrices row-major, 17 significant digits.
std::string certificate_record(const CriticalCertificate<double>& cert, int N, int k);

// Two-column CSV (r, value) on the field's grid nodes.
std::string field_csv(const RadialField<double>& field, const std::string& column = "value");

}  // namespace btower

#endif
