// gmmdiag/model.cpp

#include "gmmdiag/model.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "gmmdiag/errors.hpp"

namespace gmmdiag {

const char* to_string(LoadErrorKind kind) noexcept {
  switch (kind) {
    case LoadErrorKind::kIo: return "I/O error";
    case LoadErrorKind::kBadMagic: return "bad magic";
    case LoadErrorKind::kVersion: return "unsupported version";
    case LoadErrorKind::kSyntax: return "syntax error";
    case LoadErrorKind::kShape: return "shape error";
    case LoadErrorKind::kInvariant: return "invariant violation";
  }
  return "load error";
}

namespace {

std::vector<double> flatten(const Rows& rows, std::size_t n_dims, const char* field) {
  std::vector<double> flat;
  flat.reserve(rows.size() * n_dims);
  for (std::size_t g = 0; g < rows.size(); ++g) {
    if (rows[g].size() != n_dims) {
      throw ValidationError(field, "row " + std::to_string(g) + " has " +
                                       std::to_string(rows[g].size()) + " entries, expected " +
                                       std::to_string(n_dims));
    }
    flat.insert(flat.end(), rows[g].begin(), rows[g].end());
  }
  return flat;
}

Rows unflatten(const std::vector<double>& flat, std::size_t n_dims) {
  Rows rows;
  if (n_dims == 0) return rows;
  for (std::size_t i = 0; i < flat.size(); i += n_dims) {
    rows.emplace_back(flat.begin() + static_cast<std::ptrdiff_t>(i),
                      flat.begin() + static_cast<std::ptrdiff_t>(i + n_dims));
  }
  return rows;
}

}  // namespace

GmmModel GmmModel::reset(std::size_t n_dims, std::size_t n_gaus) {
  if (n_dims == 0) throw std::invalid_argument("reset: n_dims must be positive");
  if (n_gaus == 0) throw std::invalid_argument("reset: n_gaus must be positive");
  GmmModel m;
  m.assign(n_dims, std::vector<double>(n_dims * n_gaus, 0.0),
           std::vector<double>(n_dims * n_gaus, 1.0),
           std::vector<double>(n_gaus, 1.0 / static_cast<double>(n_gaus)),
           HeftPolicy::kRenormalise);
  return m;
}

GmmModel GmmModel::from_params(const Rows& means, const Rows& dcovs,
                               std::span<const double> hefts) {
  GmmModel m;
  m.set_params(means, dcovs, hefts);
  return m;
}

GmmModel GmmModel::from_flat(std::size_t n_dims, std::vector<double> means,
                             std::vector<double> dcovs, std::vector<double> hefts) {
  GmmModel m;
  m.assign(n_dims, std::move(means), std::move(dcovs), std::move(hefts),
           HeftPolicy::kRenormalise);
  return m;
}

void GmmModel::set_params(const Rows& means, const Rows& dcovs, std::span<const double> hefts) {
  if (means.empty()) throw ValidationError("means", "at least one Gaussian is required");
  const std::size_t n_dims = means.front().size();
  if (dcovs.size() != means.size()) {
    throw ValidationError("dcovs", "expected " + std::to_string(means.size()) +
                                       " rows, got " + std::to_string(dcovs.size()));
  }
  auto flat_means = flatten(means, n_dims, "means");
  auto flat_dcovs = flatten(dcovs, n_dims, "dcovs");
  assign(n_dims, std::move(flat_means), std::move(flat_dcovs),
         std::vector<double>(hefts.begin(), hefts.end()), HeftPolicy::kRenormalise);
}

void GmmModel::set_means(const Rows& means) {
  if (means.size() != n_gaus()) {
    throw ValidationError("means", "expected " + std::to_string(n_gaus()) + " rows, got " +
                                       std::to_string(means.size()));
  }
  assign(n_dims_, flatten(means, n_dims_, "means"), dcovs_, hefts_, HeftPolicy::kStrict);
}

void GmmModel::set_dcovs(const Rows& dcovs) {
  if (dcovs.size() != n_gaus()) {
    throw ValidationError("dcovs", "expected " + std::to_string(n_gaus()) + " rows, got " +
                                       std::to_string(dcovs.size()));
  }
  assign(n_dims_, means_, flatten(dcovs, n_dims_, "dcovs"), hefts_, HeftPolicy::kStrict);
}

void GmmModel::set_hefts(std::span<const double> hefts) {
  if (hefts.size() != n_gaus()) {
    throw ValidationError("hefts", "expected " + std::to_string(n_gaus()) + " entries, got " +
                                       std::to_string(hefts.size()));
  }
  assign(n_dims_, means_, dcovs_, std::vector<double>(hefts.begin(), hefts.end()),
         HeftPolicy::kRenormalise);
}

Rows GmmModel::means_rows() const { return unflatten(means_, n_dims_); }
Rows GmmModel::dcovs_rows() const { return unflatten(dcovs_, n_dims_); }

void GmmModel::assign(std::size_t n_dims, std::vector<double> means, std::vector<double> dcovs,
                      std::vector<double> hefts, HeftPolicy policy) {
  const std::size_t n_gaus = hefts.size();
  if (n_dims == 0) throw ValidationError("shape", "dimensionality must be positive");
  if (n_gaus == 0) throw ValidationError("hefts", "at least one Gaussian is required");
  if (means.size() != n_gaus * n_dims) {
    throw ValidationError("means", "expected " + std::to_string(n_gaus * n_dims) +
                                       " values, got " + std::to_string(means.size()));
  }
  if (dcovs.size() != n_gaus * n_dims) {
    throw ValidationError("dcovs", "expected " + std::to_string(n_gaus * n_dims) +
                                       " values, got " + std::to_string(dcovs.size()));
  }
  for (double v : means) {
    if (!std::isfinite(v)) throw ValidationError("means", "non-finite entry");
  }
  for (double v : dcovs) {
    if (!std::isfinite(v) || !(v > 0.0) || !std::isfinite(1.0 / v)) {
      throw ValidationError("dcovs", "entries must be finite and strictly positive");
    }
  }
  double sum = 0.0;
  for (double w : hefts) {
    if (!std::isfinite(w) || w < 0.0) {
      throw ValidationError("hefts", "entries must be finite and non-negative");
    }
    sum += w;
  }
  const double tol = policy == HeftPolicy::kStrict ? kHeftSumInvariant : kHeftSumTolerance;
  if (!(std::abs(sum - 1.0) <= tol)) {
    throw ValidationError("hefts", "sum is " + std::to_string(sum) + ", expected 1");
  }
  if (policy == HeftPolicy::kRenormalise && sum != 1.0) {
    for (double& w : hefts) w /= sum;
  }

  n_dims_ = n_dims;
  means_ = std::move(means);
  dcovs_ = std::move(dcovs);
  hefts_ = std::move(hefts);
  refresh_constants();
}

void GmmModel::refresh_constants() {
  const std::size_t n_gaus = hefts_.size();
  const double half_dims_log_2pi =
      0.5 * static_cast<double>(n_dims_) * std::log(2.0 * std::numbers::pi);

  log_hefts_.resize(n_gaus);
  log_det_terms_.resize(n_gaus);
  inv_dcovs_.resize(dcovs_.size());
  for (std::size_t g = 0; g < n_gaus; ++g) {
    log_hefts_[g] = hefts_[g] > 0.0 ? std::log(hefts_[g])
                                    : -std::numeric_limits<double>::infinity();
    double log_det = 0.0;
    for (std::size_t d = 0; d < n_dims_; ++d) {
      const double v = dcovs_[g * n_dims_ + d];
      log_det += std::log(v);
      inv_dcovs_[g * n_dims_ + d] = 1.0 / v;
    }
    log_det_terms_[g] = -half_dims_log_2pi - 0.5 * log_det;
  }
}

bool operator==(const GmmModel& a, const GmmModel& b) noexcept {
  auto bits_equal = [](const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (std::bit_cast<std::uint64_t>(x[i]) != std::bit_cast<std::uint64_t>(y[i])) return false;
    }
    return true;
  };
  return a.n_dims_ == b.n_dims_ && bits_equal(a.hefts_, b.hefts_) &&
         bits_equal(a.means_, b.means_) && bits_equal(a.dcovs_, b.dcovs_);
}

GmmModel ModelUpdate::make(std::size_t n_dims, std::vector<double> means,
                           std::vector<double> dcovs, std::vector<double> hefts) {
  GmmModel m;
  m.assign(n_dims, std::move(means), std::move(dcovs), std::move(hefts),
           GmmModel::HeftPolicy::kStrict);
  return m;
}

// ---------------------------------------------------------------------------
// Text format

namespace {

void append_real(std::string& out, double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  out.append(buf, res.ptr);
}

void append_row(std::string& out, std::span<const double> row) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i > 0) out.push_back(' ');
    append_real(out, row[i]);
  }
  out.push_back('\n');
}

std::vector<std::string_view> split_tokens(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) tokens.push_back(line.substr(i, j - i));
    i = j;
  }
  return tokens;
}

class LineReader {
 public:
  explicit LineReader(std::string_view text) : text_(text) {}

  // Next line's tokens; throws on end of input.
  std::vector<std::string_view> next(const char* what) {
    if (pos_ >= text_.size()) {
      throw LoadError(LoadErrorKind::kSyntax,
                      std::string("unexpected end of file, expected ") + what);
    }
    std::size_t end = text_.find('\n', pos_);
    if (end == std::string_view::npos) end = text_.size();
    std::string_view line = text_.substr(pos_, end - pos_);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos_ = end + 1;
    ++line_no_;
    return split_tokens(line);
  }

  bool only_blank_remaining() const {
    for (std::size_t i = pos_; i < text_.size(); ++i) {
      const char c = text_[i];
      if (c != ' ' && c != '\t' && c != '\n' && c != '\r') return false;
    }
    return true;
  }

  std::size_t line_no() const noexcept { return line_no_; }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_no_ = 0;
};

double parse_real(std::string_view token, std::size_t line_no) {
  double v = 0.0;
  auto res = std::from_chars(token.data(), token.data() + token.size(), v);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size()) {
    throw LoadError(LoadErrorKind::kSyntax, "line " + std::to_string(line_no) +
                                                ": invalid number '" + std::string(token) + "'");
  }
  if (!std::isfinite(v)) {
    throw LoadError(LoadErrorKind::kSyntax,
                    "line " + std::to_string(line_no) + ": non-finite value");
  }
  return v;
}

std::size_t parse_count(std::string_view token, std::size_t line_no) {
  std::size_t v = 0;
  auto res = std::from_chars(token.data(), token.data() + token.size(), v);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size()) {
    throw LoadError(LoadErrorKind::kSyntax, "line " + std::to_string(line_no) +
                                                ": invalid count '" + std::string(token) + "'");
  }
  return v;
}

void read_row(LineReader& reader, std::size_t expected, const char* what,
              std::vector<double>& out) {
  auto tokens = reader.next(what);
  if (tokens.size() != expected) {
    throw LoadError(LoadErrorKind::kShape,
                    "line " + std::to_string(reader.line_no()) + ": expected " +
                        std::to_string(expected) + " " + what + " values, got " +
                        std::to_string(tokens.size()));
  }
  for (auto t : tokens) out.push_back(parse_real(t, reader.line_no()));
}

}  // namespace

std::string format_model(const GmmModel& model) {
  std::string out;
  out.append(kModelMagic);
  out.push_back(' ');
  out.append(std::to_string(kModelVersion));
  out.push_back('\n');
  out.append(std::to_string(model.n_dims()));
  out.push_back(' ');
  out.append(std::to_string(model.n_gaus()));
  out.push_back('\n');
  append_row(out, model.hefts());
  for (std::size_t g = 0; g < model.n_gaus(); ++g) append_row(out, model.mean(g));
  for (std::size_t g = 0; g < model.n_gaus(); ++g) append_row(out, model.dcov(g));
  return out;
}

void write_model(std::ostream& out, const GmmModel& model) { out << format_model(model); }

GmmModel parse_model(std::string_view text) {
  if (text.empty()) throw LoadError(LoadErrorKind::kBadMagic, "empty file");
  LineReader reader(text);

  auto header = reader.next("header");
  if (header.empty() || header[0] != kModelMagic) {
    throw LoadError(LoadErrorKind::kBadMagic, "file does not start with GMM_DIAG");
  }
  if (header.size() != 2) {
    throw LoadError(LoadErrorKind::kSyntax, "line 1: expected 'GMM_DIAG <version>'");
  }
  if (header[1] != std::to_string(kModelVersion)) {
    throw LoadError(LoadErrorKind::kVersion, "version '" + std::string(header[1]) +
                                                 "' is not supported");
  }

  auto shape = reader.next("shape");
  if (shape.size() != 2) {
    throw LoadError(LoadErrorKind::kSyntax, "line 2: expected '<D> <N_G>'");
  }
  const std::size_t n_dims = parse_count(shape[0], 2);
  const std::size_t n_gaus = parse_count(shape[1], 2);
  if (n_dims == 0 || n_gaus == 0) {
    throw LoadError(LoadErrorKind::kShape, "dimensions and Gaussian count must be positive");
  }

  std::vector<double> hefts, means, dcovs;
  hefts.reserve(n_gaus);
  means.reserve(n_gaus * n_dims);
  dcovs.reserve(n_gaus * n_dims);
  read_row(reader, n_gaus, "heft", hefts);
  for (std::size_t g = 0; g < n_gaus; ++g) read_row(reader, n_dims, "mean", means);
  for (std::size_t g = 0; g < n_gaus; ++g) read_row(reader, n_dims, "dcov", dcovs);
  if (!reader.only_blank_remaining()) {
    throw LoadError(LoadErrorKind::kSyntax, "trailing content after line " +
                                                std::to_string(reader.line_no()));
  }

  GmmModel m;
  try {
    m.assign(n_dims, std::move(means), std::move(dcovs), std::move(hefts),
             GmmModel::HeftPolicy::kStrict);
  } catch (const ValidationError& e) {
    throw LoadError(LoadErrorKind::kInvariant, e.what());
  }
  return m;
}

void save(const GmmModel& model, const std::filesystem::path& path) {
  if (model.n_gaus() == 0) throw std::invalid_argument("save: model is empty");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw LoadError(LoadErrorKind::kIo, "cannot open '" + path.string() + "' for writing");
  out << format_model(model);
  out.flush();
  if (!out) throw LoadError(LoadErrorKind::kIo, "write to '" + path.string() + "' failed");
}

GmmModel load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError(LoadErrorKind::kIo, "cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw LoadError(LoadErrorKind::kIo, "read from '" + path.string() + "' failed");
  return parse_model(buf.str());
}

}  // namespace gmmdiag
