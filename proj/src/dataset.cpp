#include "steinsim/dataset.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace steinsim {

Eigen::Index SimDataset::ambient_dim() const {
  Eigen::Index p = 1;
  for (Eigen::Index d : dims) p *= d;
  return p;
}

void SimDataset::validate() const {
  if (dims.empty()) throw std::invalid_argument("dataset: dims must be nonempty");
  for (Eigen::Index d : dims)
    if (d <= 0) throw std::invalid_argument("dataset: dims must be positive");
  if (covariates.cols() != ambient_dim())
    throw std::invalid_argument("dataset: covariate width does not match dims product");
  if (has_responses() && responses.size() != covariates.rows())
    throw std::invalid_argument("dataset: response count does not match sample count");
}

namespace {

std::vector<double> parse_row(const std::string& line, const std::string& path, std::size_t lineno) {
  std::vector<double> vals;
  std::istringstream is(line);
  std::string tok;
  while (std::getline(is, tok, ',')) {
    std::size_t pos = 0;
    double v;
    try {
      v = std::stod(tok, &pos);
    } catch (const std::exception&) {
      pos = std::string::npos;
    }
    if (pos != tok.size()) {
      std::ostringstream os;
      os << path << ":" << lineno << ": malformed numeric field '" << tok << "'";
      throw std::runtime_error(os.str());
    }
    vals.push_back(v);
  }
  return vals;
}

}  // namespace

SimDataset read_dataset_csv(const std::string& path, bool expect_responses) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("#dims=", 0) != 0)
    throw std::runtime_error(path + ": missing '#dims=' header line");

  SimDataset data;
  {
    std::istringstream is(line.substr(6));
    std::string tok;
    while (std::getline(is, tok, ',')) {
      long d = 0;
      try {
        d = std::stol(tok);
      } catch (const std::exception&) {
        d = 0;
      }
      if (d <= 0) throw std::runtime_error(path + ": malformed '#dims=' header");
      data.dims.push_back(d);
    }
    if (data.dims.empty()) throw std::runtime_error(path + ": malformed '#dims=' header");
  }

  const Eigen::Index width = data.ambient_dim() + (expect_responses ? 1 : 0);
  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto vals = parse_row(line, path, lineno);
    if (static_cast<Eigen::Index>(vals.size()) != width) {
      std::ostringstream os;
      os << path << ":" << lineno << ": expected " << width << " fields, found " << vals.size();
      throw std::runtime_error(os.str());
    }
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw std::runtime_error(path + ": no data rows");

  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index p = data.ambient_dim();
  data.covariates.resize(n, p);
  if (expect_responses) data.responses.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    Eigen::Index off = 0;
    if (expect_responses) data.responses[i] = r[static_cast<std::size_t>(off++)];
    for (Eigen::Index j = 0; j < p; ++j)
      data.covariates(i, j) = r[static_cast<std::size_t>(off + j)];
  }
  data.validate();
  return data;
}

void write_dataset_csv(const std::string& path, const SimDataset& data) {
  data.validate();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out << "#dims=";
  for (std::size_t i = 0; i < data.dims.size(); ++i)
    out << (i ? "," : "") << data.dims[i];
  out << "\n";
  char buf[32];
  for (Eigen::Index i = 0; i < data.sample_count(); ++i) {
    bool first = true;
    if (data.has_responses()) {
      std::snprintf(buf, sizeof buf, "%.17g", data.responses[i]);
      out << buf;
      first = false;
    }
    for (Eigen::Index j = 0; j < data.covariates.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", data.covariates(i, j));
      out << (first ? "" : ",") << buf;
      first = false;
    }
    out << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace steinsim
