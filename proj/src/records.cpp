#include "btower/records.hpp"

#include "btower/experiments.hpp"

#include <fmt/format.h>

namespace btower {

namespace {

std::string joined(const double* v, Eigen::Index n) {
  std::string out;
  for (Eigen::Index i = 0; i < n; ++i) out += (i ? " " : "") + format_csv_number(v[i]);
  return out;
}

void matrix_lines(std::string& out, const std::string& key, const Mat<double>& m) {
  out += fmt::format("{}.rows={}\n{}.cols={}\n", key, m.rows(), key, m.cols());
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = m;
  out += key + ".data=" + joined(rm.data(), rm.size()) + "\n";
}

}  // namespace

std::string certificate_record(const CriticalCertificate<double>& cert, int N, int k) {
  std::string out;
  out += fmt::format("N={}\nk={}\niterations={}\n", N, k, cert.iterations);
  out += "mu=" + joined(cert.point.mu.data(), cert.point.mu.size()) + "\n";
  out += "nu=" + joined(cert.nu.data(), cert.nu.size()) + "\n";
  out += "grad_norm=" + format_csv_number(cert.grad_norm) + "\n";
  out += "lambda=" + format_csv_number(cert.lambda) + "\n";
  out += "chain_residual=" + format_csv_number(cert.chain_residual) + "\n";
  out += "off_block=" + format_csv_number(cert.off_block) + "\n";
  out += "det_q=" + format_csv_number(cert.q.det_recursion) + "\n";
  out += "det_target=" + format_csv_number(cert.q.det_target) + "\n";
  out += "det_lu=" + format_csv_number(cert.q.det_lu) + "\n";
  matrix_lines(out, "q", cert.q.Q);
  matrix_lines(out, "hessian_nu", cert.hessian_nu);
  matrix_lines(out, "hessian", cert.hessian);
  return out;
}

std::string field_csv(const RadialField<double>& field, const std::string& column) {
  std::string out = "r," + column + "\n";
  for (int j = 0; j < field.grid->size(); ++j)
    out += format_csv_number(field.grid->r(j)) + "," + format_csv_number(field.values(j)) + "\n";
  return out;
}

}  // namespace btower
