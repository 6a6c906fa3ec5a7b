#include "smcr/serialize.hpp"

#include <algorithm>
#include <sstream>

#include "smcr/error.hpp"
#include "smcr/text_format.hpp"

namespace smcr {

void Bundle::set(const std::string& key, std::string value) {
  auto it = std::find_if(scalar_order_.begin(), scalar_order_.end(), [&](const auto& kv) { return kv.first == key; });
  if (it == scalar_order_.end())
    scalar_order_.emplace_back(key, value);
  else
    it->second = value;
  scalars_[key] = std::move(value);
}

void Bundle::set_matrix(const std::string& name, Matrix m) {
  for (auto& [n, existing] : matrices_)
    if (n == name) {
      existing = std::move(m);
      return;
    }
  matrices_.emplace_back(name, std::move(m));
}

const std::string& Bundle::get(const std::string& key) const {
  auto it = scalars_.find(key);
  if (it == scalars_.end()) fail(ErrorKind::Integrity, source_ + ": missing entry '" + key + "'");
  return it->second;
}

const Matrix& Bundle::matrix(const std::string& name) const {
  for (const auto& [n, m] : matrices_)
    if (n == name) return m;
  fail(ErrorKind::Integrity, source_ + ": missing matrix '" + name + "'");
}

std::string Bundle::str() const {
  std::string out;
  for (const auto& [k, v] : scalar_order_) out += k + "=" + v + "\n";
  for (const auto& [name, m] : matrices_) {
    out += "@matrix " + name + " " + std::to_string(m.rows) + " " + std::to_string(m.cols) + "\n";
    for (std::size_t r = 0; r < m.rows; ++r) out += join_doubles(m.row(r)) + "\n";
  }
  return out;
}

Bundle Bundle::parse(std::string_view text, const std::string& source_name) {
  Bundle b;
  b.source_ = source_name;
  std::vector<std::string_view> lines = split(text, '\n');
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string where = source_name + ":" + std::to_string(i + 1);
    const std::string_view line = trim(lines[i]);
    if (line.empty() || line.front() == '#') continue;
    if (line.rfind("@matrix ", 0) == 0) {
      const auto parts = split(line, ' ');
      if (parts.size() != 4) fail(ErrorKind::Parse, where + ": malformed matrix header");
      const auto rows = parse_int(parts[2], where);
      const auto cols = parse_int(parts[3], where);
      if (rows < 0 || cols < 0) fail(ErrorKind::Parse, where + ": negative matrix shape");
      Matrix m(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols));
      for (std::size_t r = 0; r < m.rows; ++r) {
        if (++i >= lines.size()) fail(ErrorKind::Integrity, where + ": matrix '" + std::string(parts[1]) + "' truncated");
        const std::string row_where = source_name + ":" + std::to_string(i + 1);
        const auto values = parse_double_list(trim(lines[i]), row_where);
        if (values.size() != m.cols) fail(ErrorKind::Integrity, row_where + ": expected " + std::to_string(m.cols) + " values");
        std::copy(values.begin(), values.end(), m.row(r).begin());
      }
      b.set_matrix(std::string(parts[1]), std::move(m));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail(ErrorKind::Parse, where + ": expected key=value");
    b.set(std::string(trim(line.substr(0, eq))), std::string(trim(line.substr(eq + 1))));
  }
  return b;
}

void Bundle::save(const std::filesystem::path& path) const { write_text_file(path, str()); }

Bundle Bundle::load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) fail(ErrorKind::Io, "missing artifact: " + path.string());
  return parse(read_text_file(path), path.string());
}

namespace {

std::string join_ints(const auto& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(values[i]);
  }
  return out;
}

std::vector<std::int64_t> parse_ints(std::string_view text, const std::string& context) {
  std::vector<std::int64_t> out;
  if (trim(text).empty()) return out;
  for (auto part : split(text, ',')) out.push_back(parse_int(trim(part), context));
  return out;
}

Matrix vector_as_row(const Vector& v) {
  Matrix m(1, v.size());
  m.data = v;
  return m;
}

Vector row_as_vector(const Matrix& m, const std::string& name) {
  if (m.rows != 1) fail(ErrorKind::Integrity, "matrix '" + name + "' must have one row");
  return m.data;
}

std::int64_t int_entry(const Bundle& b, const std::string& key) { return parse_int(b.get(key), key); }

}  // namespace

void put_encoder(Bundle& b, const std::string& prefix, const EncoderParams& e) {
  b.set(prefix + ".activation", std::string(to_string(e.activation)));
  b.set(prefix + ".layers", std::to_string(e.layers.size()));
  for (std::size_t l = 0; l < e.layers.size(); ++l) {
    const std::string p = prefix + ".layer" + std::to_string(l);
    b.set_matrix(p + ".weight", e.layers[l].weight);
    b.set_matrix(p + ".bias", vector_as_row(e.layers[l].bias));
  }
}

EncoderParams get_encoder(const Bundle& b, const std::string& prefix) {
  if (b.get(prefix + ".activation") != to_string(Activation::Tanh))
    fail(ErrorKind::Integrity, "unsupported activation '" + b.get(prefix + ".activation") + "'");
  EncoderParams e;
  const auto n = int_entry(b, prefix + ".layers");
  for (std::int64_t l = 0; l < n; ++l) {
    const std::string p = prefix + ".layer" + std::to_string(l);
    e.layers.push_back({b.matrix(p + ".weight"), row_as_vector(b.matrix(p + ".bias"), p + ".bias")});
  }
  try {
    e.validate();
  } catch (const Error& err) {
    fail(ErrorKind::Integrity, std::string("stored encoder is invalid: ") + err.what());
  }
  return e;
}

void save_encoder(const EncoderParams& e, const std::filesystem::path& path) {
  Bundle b;
  b.set("format", "smcr-encoder-1");
  put_encoder(b, "encoder", e);
  b.save(path);
}

EncoderParams load_encoder(const std::filesystem::path& path) {
  const Bundle b = Bundle::load(path);
  if (b.get("format") != "smcr-encoder-1") fail(ErrorKind::Integrity, path.string() + ": not an encoder file");
  return get_encoder(b, "encoder");
}

void put_translator(Bundle& b, const std::string& prefix, const TranslatorParams& t) {
  b.set_matrix(prefix + ".scale", vector_as_row(t.scale));
  b.set_matrix(prefix + ".rotation", t.rotation);
  b.set_matrix(prefix + ".frame", t.frame);
  b.set_matrix(prefix + ".offset", vector_as_row(t.offset));
}

TranslatorParams get_translator(const Bundle& b, const std::string& prefix) {
  TranslatorParams t;
  t.scale = row_as_vector(b.matrix(prefix + ".scale"), prefix + ".scale");
  t.rotation = b.matrix(prefix + ".rotation");
  t.frame = b.matrix(prefix + ".frame");
  t.offset = row_as_vector(b.matrix(prefix + ".offset"), prefix + ".offset");
  t.validate();
  return t;
}

void save_branch(const BranchState& s, const std::filesystem::path& path) {
  Bundle b;
  b.set("format", "smcr-branch-1");
  b.set("kind", std::string(to_string(s.kind)));
  b.set("sampling_seed", std::to_string(s.sampling_seed));
  put_encoder(b, "encoder", s.encoder);
  put_encoder(b, "momentum", s.momentum.params);
  b.set("momentum.step", std::to_string(s.momentum.step));

  const auto& hls = s.label_system;
  b.set("labels.num_source", std::to_string(hls.num_source));
  b.set("labels.num_target", std::to_string(hls.num_target));
  b.set("labels.source_class_of_label", join_ints(hls.source_class_of_label));
  b.set("labels.classes", std::to_string(hls.classes.size()));
  Matrix prototypes(hls.classes.size(), hls.dim());
  for (std::size_t c = 0; c < hls.classes.size(); ++c) {
    const auto& cls = hls.classes[c];
    b.set("class" + std::to_string(c) + ".origin", std::to_string(static_cast<int>(cls.origin)));
    b.set("class" + std::to_string(c) + ".members", join_ints(cls.members));
    std::copy(cls.prototype.begin(), cls.prototype.end(), prototypes.row(c).begin());
  }
  b.set_matrix("labels.prototypes", prototypes);

  b.set("pseudo.num_clusters", std::to_string(s.pseudo.num_clusters));
  b.set("pseudo.num_outliers", std::to_string(s.pseudo.num_outliers));
  b.set("pseudo.labels", join_ints(s.pseudo.labels));
  b.set("first_epoch.present", s.first_epoch.shrink ? "1" : "0");
  if (s.first_epoch.shrink) b.set_matrix("first_epoch.shrink", vector_as_row(*s.first_epoch.shrink));
  b.save(path);
}

BranchState load_branch(const std::filesystem::path& path) {
  const Bundle b = Bundle::load(path);
  if (b.get("format") != "smcr-branch-1") fail(ErrorKind::Integrity, path.string() + ": not a branch file");
  BranchState s;
  const auto& kind = b.get("kind");
  if (kind == "dthr")
    s.kind = BranchKind::Dthr;
  else if (kind == "rihr")
    s.kind = BranchKind::Rihr;
  else
    fail(ErrorKind::Integrity, path.string() + ": unknown branch kind '" + kind + "'");
  s.sampling_seed = static_cast<std::uint64_t>(std::stoull(b.get("sampling_seed")));
  s.encoder = get_encoder(b, "encoder");
  s.momentum.params = get_encoder(b, "momentum");
  s.momentum.step = static_cast<std::uint64_t>(std::stoull(b.get("momentum.step")));

  auto& hls = s.label_system;
  hls.num_source = static_cast<int>(int_entry(b, "labels.num_source"));
  hls.num_target = static_cast<int>(int_entry(b, "labels.num_target"));
  for (auto v : parse_ints(b.get("labels.source_class_of_label"), "source_class_of_label"))
    hls.source_class_of_label.push_back(static_cast<int>(v));
  const auto n = int_entry(b, "labels.classes");
  const Matrix& prototypes = b.matrix("labels.prototypes");
  if (prototypes.rows != static_cast<std::size_t>(n))
    fail(ErrorKind::Integrity, path.string() + ": prototype count disagrees with class count");
  for (std::int64_t c = 0; c < n; ++c) {
    HybridClass cls;
    cls.id = static_cast<int>(c);
    const auto origin = int_entry(b, "class" + std::to_string(c) + ".origin");
    if (origin < 0 || origin > 2) fail(ErrorKind::Integrity, path.string() + ": bad class origin");
    cls.origin = static_cast<ClassOrigin>(origin);
    for (auto m : parse_ints(b.get("class" + std::to_string(c) + ".members"), "members"))
      cls.members.push_back(static_cast<std::size_t>(m));
    const auto row = prototypes.row(static_cast<std::size_t>(c));
    cls.prototype.assign(row.begin(), row.end());
    hls.classes.push_back(std::move(cls));
  }

  s.pseudo.num_clusters = static_cast<int>(int_entry(b, "pseudo.num_clusters"));
  s.pseudo.num_outliers = static_cast<int>(int_entry(b, "pseudo.num_outliers"));
  for (auto v : parse_ints(b.get("pseudo.labels"), "pseudo.labels")) s.pseudo.labels.push_back(static_cast<int>(v));
  if (b.get("first_epoch.present") == "1")
    s.first_epoch.shrink = row_as_vector(b.matrix("first_epoch.shrink"), "first_epoch.shrink");
  if (!same_shape(s.encoder, s.momentum.params))
    fail(ErrorKind::Integrity, path.string() + ": momentum shape differs from encoder");
  return s;
}

}  // namespace smcr
