#pragma once

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <unistd.h>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace testing {

inline std::vector<double> simulate_ar(const std::vector<double>& phi, double intercept,
                                       double sigma, std::size_t n, unsigned seed,
                                       std::size_t burn = 500) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  std::vector<double> x(n + burn, 0.0);
  for (std::size_t t = phi.size(); t < x.size(); ++t) {
    double v = intercept + noise(rng);
    for (std::size_t k = 0; k < phi.size(); ++k) v += phi[k] * x[t - 1 - k];
    x[t] = v;
  }
  return {x.begin() + static_cast<std::ptrdiff_t>(burn), x.end()};
}

inline Eigen::MatrixXd random_walks(std::size_t rows, std::size_t cols, unsigned seed,
                                    double drift = 0.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    double level = 0.0;
    for (Eigen::Index t = 0; t < x.rows(); ++t) {
      level += drift + noise(rng);
      x(t, c) = level;
    }
  }
  return x;
}

inline Eigen::MatrixXd columns(const std::vector<std::vector<double>>& cols) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(cols.front().size()),
                    static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    for (std::size_t t = 0; t < cols[c].size(); ++t) {
      x(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(c)) = cols[c][t];
    }
  }
  return x;
}

// Plain Gaussian elimination with partial pivoting on a dense system.
inline std::vector<double> gauss_solve(std::vector<std::vector<double>> a,
                                       std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t piv = i;
    for (std::size_t r = i + 1; r < n; ++r) {
      if (std::abs(a[r][i]) > std::abs(a[piv][i])) piv = r;
    }
    std::swap(a[i], a[piv]);
    std::swap(b[i], b[piv]);
    for (std::size_t r = i + 1; r < n; ++r) {
      const double f = a[r][i] / a[i][i];
      for (std::size_t c = i; c < n; ++c) a[r][c] -= f * a[i][c];
      b[r] -= f * b[i];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double v = b[i];
    for (std::size_t c = i + 1; c < n; ++c) v -= a[i][c] * x[c];
    x[i] = v / a[i][i];
  }
  return x;
}

// OLS of x_t on [1, x_{t-1}, ..., x_{t-p}] pooled over channels, built row by
// row from the design matrix (no shortcuts shared with the library).
inline std::vector<double> brute_force_ols(const std::vector<std::vector<double>>& channels,
                                           std::size_t p, bool intercept = true) {
  const std::size_t k = p + (intercept ? 1 : 0);
  std::vector<std::vector<double>> xtx(k, std::vector<double>(k, 0.0));
  std::vector<double> xty(k, 0.0);
  for (const auto& x : channels) {
    for (std::size_t t = p; t < x.size(); ++t) {
      std::vector<double> row;
      if (intercept) row.push_back(1.0);
      for (std::size_t lag = 1; lag <= p; ++lag) row.push_back(x[t - lag]);
      for (std::size_t i = 0; i < k; ++i) {
        xty[i] += row[i] * x[t];
        for (std::size_t j = 0; j < k; ++j) xtx[i][j] += row[i] * row[j];
      }
    }
  }
  return gauss_solve(xtx, xty);
}

inline double brute_force_rss(const std::vector<std::vector<double>>& channels,
                              std::size_t p, const std::vector<double>& beta,
                              bool intercept = true) {
  double rss = 0.0;
  for (const auto& x : channels) {
    for (std::size_t t = p; t < x.size(); ++t) {
      double pred = intercept ? beta[0] : 0.0;
      for (std::size_t lag = 1; lag <= p; ++lag) {
        pred += beta[lag - (intercept ? 0 : 1)] * x[t - lag];
      }
      rss += (x[t] - pred) * (x[t] - pred);
    }
  }
  return rss;
}

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("autoar_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path write(const std::string& name, const std::string& text) const {
    const auto p = path_ / name;
    std::ofstream(p, std::ios::binary) << text;
    return p;
  }

 private:
  std::filesystem::path path_;
};

inline std::string csv_of(const Eigen::MatrixXd& x) {
  std::string out = "date";
  for (Eigen::Index c = 0; c < x.cols(); ++c) out += ",v" + std::to_string(c);
  out += '\n';
  char buf[64];
  for (Eigen::Index t = 0; t < x.rows(); ++t) {
    out += std::to_string(t);
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      std::snprintf(buf, sizeof buf, ",%.17g", x(t, c));
      out += buf;
    }
    out += '\n';
  }
  return out;
}

struct KpssCase {
  std::string id;
  std::string kind;
  std::size_t lags = 0;
  double statistic = 0.0;
  bool reference_reject = false;
  std::vector<double> values;
};

// Rows of tests/data/kpss_reference.csv (generated with statsmodels).
inline std::vector<KpssCase> load_kpss_cases(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  std::vector<KpssCase> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    for (int i = 0; i < 5; ++i) {
      const auto comma = line.find(',', start);
      f.push_back(line.substr(start, comma - start));
      start = comma + 1;
    }
    KpssCase c;
    c.id = f[0];
    c.kind = f[1];
    c.lags = std::stoul(f[2]);
    c.statistic = std::stod(f[3]);
    c.reference_reject = f[4] == "1";
    std::istringstream vs(line.substr(start));
    double v;
    while (vs >> v) c.values.push_back(v);
    out.push_back(std::move(c));
  }
  return out;
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace testing
