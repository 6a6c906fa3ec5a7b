#include "smcr/data.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "smcr/error.hpp"
#include "smcr/text_format.hpp"

namespace smcr {

std::string_view to_string(DomainTag tag) {
  switch (tag) {
    case DomainTag::Synthetic: return "SYNTHETIC";
    case DomainTag::Source: return "SOURCE";
    case DomainTag::Target: return "TARGET";
    case DomainTag::Synth2Src: return "SYNTH2SRC";
    case DomainTag::Src2Tgt: return "SRC2TGT";
  }
  return "UNKNOWN";
}

DomainTag parse_domain_tag(std::string_view name) {
  for (auto tag : {DomainTag::Synthetic, DomainTag::Source, DomainTag::Target, DomainTag::Synth2Src,
                   DomainTag::Src2Tgt})
    if (to_string(tag) == name) return tag;
  fail(ErrorKind::Parse, "unknown domain tag '" + std::string(name) + "'");
}

bool DomainDataset::labeled() const {
  return std::all_of(samples.begin(), samples.end(),
                     [](const Sample& s) { return s.identity != kUnlabeled; });
}

void DomainDataset::validate() const {
  if (num_identities <= 0) fail(ErrorKind::Integrity, "num_identities must be positive");
  if (num_cameras <= 0) fail(ErrorKind::Integrity, "num_cameras must be positive");
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    const auto where = "sample " + std::to_string(i);
    if (s.x.size() != dim) fail(ErrorKind::Integrity, where + " has dimension " + std::to_string(s.x.size()));
    if (!all_finite(s.x)) fail(ErrorKind::Integrity, where + " has non-finite features");
    if (s.domain != domain) fail(ErrorKind::Integrity, where + " carries a different domain tag");
    if (s.identity != kUnlabeled && (s.identity < 0 || s.identity >= num_identities))
      fail(ErrorKind::Integrity, where + " identity out of range");
    if (s.camera < 0 || s.camera >= num_cameras) fail(ErrorKind::Integrity, where + " camera out of range");
  }
}

void DomainSpec::validate() const {
  if (num_identities <= 0 || samples_per_identity <= 0 || num_cameras <= 0 || input_dim == 0)
    fail(ErrorKind::Config, "domain spec counts must be positive");
  if (!(identity_spread > 0.0)) fail(ErrorKind::Config, "identity_spread must be positive");
  if (!(camera_shift_scale >= 0.0)) fail(ErrorKind::Config, "camera_shift_scale must be non-negative");
  if (!(nuisance_spread >= 0.0)) fail(ErrorKind::Config, "nuisance_spread must be non-negative");
  if (identity_dims > input_dim) fail(ErrorKind::Config, "identity_dims exceeds input_dim");
  if (!transform.scale.empty()) {
    if (transform.scale.size() != input_dim) fail(ErrorKind::Config, "scale vector length differs from input_dim");
    for (double s : transform.scale)
      if (!(s > 0.0)) fail(ErrorKind::Config, "scale entries must be positive");
  }
  if (!transform.offset.empty() && transform.offset.size() != input_dim)
    fail(ErrorKind::Config, "offset vector length differs from input_dim");
}

Matrix rotation_matrix(std::size_t dim, std::uint64_t seed, double strength) {
  Matrix q = Matrix::identity(dim);
  if (strength == 0.0) return q;
  Rng rng(seed);
  for (double& v : q.data) v += strength * rng.normal();
  orthonormalize_columns(q);
  return q;
}

DomainDataset generate_domain(const DomainSpec& spec) {
  spec.validate();
  const std::size_t dim = spec.input_dim;
  const std::size_t id_dims = spec.identity_dims == 0 ? dim : spec.identity_dims;
  Rng rng(spec.rng_seed);

  std::vector<Vector> centroids(spec.num_identities, Vector(dim, 0.0));
  for (auto& c : centroids)
    for (std::size_t d = 0; d < id_dims; ++d) c[d] = spec.centroid_scale * rng.normal();

  std::vector<Vector> camera_offsets(spec.num_cameras, Vector(dim, 0.0));
  for (auto& o : camera_offsets)
    for (double& v : o) v = spec.camera_shift_scale * rng.normal();

  const Matrix rotation = rotation_matrix(dim, spec.transform.rotation_seed, spec.transform.rotation_strength);
  const Vector scale = spec.transform.scale.empty() ? Vector(dim, 1.0) : spec.transform.scale;
  const Vector offset = spec.transform.offset.empty() ? Vector(dim, 0.0) : spec.transform.offset;

  DomainDataset ds;
  ds.domain = spec.domain;
  ds.num_identities = spec.num_identities;
  ds.num_cameras = spec.num_cameras;
  ds.dim = dim;
  ds.samples.reserve(static_cast<std::size_t>(spec.num_identities) * spec.num_cameras *
                     spec.samples_per_identity);
  Vector z(dim);
  for (int id = 0; id < spec.num_identities; ++id) {
    for (int cam = 0; cam < spec.num_cameras; ++cam) {
      for (int rep = 0; rep < spec.samples_per_identity; ++rep) {
        for (std::size_t d = 0; d < dim; ++d) {
          double v = centroids[id][d] + camera_offsets[cam][d] + spec.identity_spread * rng.normal();
          if (d >= id_dims) v += spec.nuisance_spread * rng.normal();
          z[d] = scale[d] * v;
        }
        Vector x = multiply(rotation, z);
        for (std::size_t d = 0; d < dim; ++d) x[d] += offset[d];
        ds.samples.push_back(Sample{std::move(x), id, spec.domain, cam});
      }
    }
  }
  return ds;
}

void save_dataset(const DomainDataset& ds, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorKind::Io, "cannot create directory '" + dir.string() + "'");
  std::string meta;
  meta += "dim=" + std::to_string(ds.dim) + "\n";
  meta += "num_identities=" + std::to_string(ds.num_identities) + "\n";
  meta += "num_cameras=" + std::to_string(ds.num_cameras) + "\n";
  meta += "domain=" + std::string(to_string(ds.domain)) + "\n";
  meta += "count=" + std::to_string(ds.samples.size()) + "\n";
  write_text_file(dir / "meta.txt", meta);

  std::string csv = "identity,camera";
  for (std::size_t d = 0; d < ds.dim; ++d) csv += ",f" + std::to_string(d);
  csv += "\n";
  for (const auto& s : ds.samples) {
    csv += std::to_string(s.identity) + "," + std::to_string(s.camera);
    for (double v : s.x) {
      csv.push_back(',');
      csv += format_double(v);
    }
    csv.push_back('\n');
  }
  write_text_file(dir / "samples.csv", csv);
}

DomainDataset load_dataset(const std::filesystem::path& dir) {
  const auto meta_path = dir / "meta.txt";
  const auto csv_path = dir / "samples.csv";
  const auto meta = KeyValues::load(meta_path);
  const auto meta_int = [&](const std::string& key) {
    if (!meta.contains(key)) fail(ErrorKind::Parse, meta_path.string() + ": missing key '" + key + "'");
    return parse_int(*meta.get(key), meta_path.string() + " line " + std::to_string(meta.line_of(key)));
  };

  DomainDataset ds;
  const auto dim = meta_int("dim");
  ds.num_identities = static_cast<int>(meta_int("num_identities"));
  ds.num_cameras = static_cast<int>(meta_int("num_cameras"));
  const auto count = meta_int("count");
  if (dim <= 0 || count < 0) fail(ErrorKind::Integrity, meta_path.string() + ": dim/count out of range");
  ds.dim = static_cast<std::size_t>(dim);
  if (!meta.contains("domain")) fail(ErrorKind::Parse, meta_path.string() + ": missing key 'domain'");
  ds.domain = parse_domain_tag(*meta.get("domain"));

  const std::string text = read_text_file(csv_path);
  const auto lines = split(text, '\n');
  std::size_t line_no = 0;
  bool header_seen = false;
  for (auto raw : lines) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty()) continue;
    const auto where = csv_path.string() + " line " + std::to_string(line_no);
    const auto fields = split(line, ',');
    if (!header_seen) {
      header_seen = true;
      if (fields.size() != ds.dim + 2 || trim(fields[0]) != "identity" || trim(fields[1]) != "camera")
        fail(ErrorKind::Integrity, where + ": header does not match declared dim " + std::to_string(ds.dim));
      continue;
    }
    const std::size_t row = ds.samples.size();
    if (fields.size() != ds.dim + 2)
      fail(ErrorKind::Integrity, where + " (row " + std::to_string(row) + "): expected " +
                                     std::to_string(ds.dim) + " feature values, found " +
                                     std::to_string(fields.size() < 2 ? 0 : fields.size() - 2));
    Sample s;
    s.identity = static_cast<int>(parse_int(fields[0], where));
    s.camera = static_cast<int>(parse_int(fields[1], where));
    s.domain = ds.domain;
    s.x.reserve(ds.dim);
    for (std::size_t d = 0; d < ds.dim; ++d) s.x.push_back(parse_double(fields[d + 2], where));
    ds.samples.push_back(std::move(s));
  }
  if (!header_seen) fail(ErrorKind::Parse, csv_path.string() + ": missing header line");
  if (ds.samples.size() != static_cast<std::size_t>(count))
    fail(ErrorKind::Integrity, csv_path.string() + ": meta declares " + std::to_string(count) +
                                   " samples, body has " + std::to_string(ds.samples.size()));
  ds.validate();
  return ds;
}

DomainDataset strip_labels(DomainDataset ds) {
  for (auto& s : ds.samples) s.identity = kUnlabeled;
  return ds;
}

std::vector<int> identity_labels(const DomainDataset& ds) {
  std::vector<int> out;
  out.reserve(ds.samples.size());
  for (const auto& s : ds.samples) out.push_back(s.identity);
  return out;
}

std::vector<Vector> raw_vectors(const DomainDataset& ds) {
  std::vector<Vector> out;
  out.reserve(ds.samples.size());
  for (const auto& s : ds.samples) out.push_back(s.x);
  return out;
}

std::vector<std::size_t> pk_batch(std::span<const int> labels, int P, int K, std::uint64_t seed) {
  if (P < 1 || K < 1) fail(ErrorKind::Domain, "P and K must be positive");
  std::map<int, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] >= 0) members[labels[i]].push_back(i);
  if (members.size() < static_cast<std::size_t>(P))
    fail(ErrorKind::Sampling, "need " + std::to_string(P) + " classes, only " +
                                  std::to_string(members.size()) + " available");

  std::vector<int> classes;
  classes.reserve(members.size());
  for (const auto& [label, _] : members) classes.push_back(label);

  Rng rng(seed);
  std::vector<std::size_t> batch;
  batch.reserve(static_cast<std::size_t>(P) * K);
  for (int p = 0; p < P; ++p) {
    const std::size_t pick = p + rng.below(classes.size() - p);
    std::swap(classes[p], classes[pick]);
    auto pool = members[classes[p]];
    if (pool.size() >= static_cast<std::size_t>(K)) {
      for (int k = 0; k < K; ++k) {
        const std::size_t j = k + rng.below(pool.size() - k);
        std::swap(pool[k], pool[j]);
        batch.push_back(pool[k]);
      }
    } else {
      for (int k = 0; k < K; ++k) batch.push_back(pool[rng.below(pool.size())]);
    }
  }
  return batch;
}

}  // namespace smcr
