#include "gsnav/perception.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <random>

namespace gsnav {

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a * 0x9E3779B97F4A7C15ull + b + 0x632BE59BD9B4E019ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

namespace {

std::uint64_t hash_string(const std::string& s) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

Eigen::VectorXd gaussian_vector(std::mt19937_64& rng, int dim) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v[i] = n(rng);
  return v;
}

// Removes the components along `basis` (orthonormal) from v.
void orthogonalize(Eigen::VectorXd& v, const std::vector<Eigen::VectorXd>& basis) {
  for (const auto& b : basis) v -= v.dot(b) * b;
}

}  // namespace

OracleFeatureSpace::OracleFeatureSpace(const Scene& scene, const FeatureSpaceParams& params)
    : params_(params) {
  if (params.dim < 2) throw ValidationError("embedding dimension must be at least 2");
  std::mt19937_64 rng(mix_seed(params.seed, 0xFEA7));
  std::vector<std::string> categories;
  for (const auto& o : scene.objects) {
    if (std::find(categories.begin(), categories.end(), o.category) == categories.end()) {
      categories.push_back(o.category);
    }
  }
  std::sort(categories.begin(), categories.end());
  std::vector<Eigen::VectorXd> basis;
  for (const auto& c : categories) {
    Eigen::VectorXd v = gaussian_vector(rng, params.dim);
    // Orthonormal while the dimension allows it.
    if (static_cast<int>(basis.size()) < params.dim) orthogonalize(v, basis);
    v.normalize();
    basis.push_back(v);
    category_[c] = v;
  }
  std::vector<const ObjectInstance*> objects;
  for (const auto& o : scene.objects) objects.push_back(&o);
  std::sort(objects.begin(), objects.end(),
            [](const ObjectInstance* a, const ObjectInstance* b) { return a->id < b->id; });
  std::vector<Eigen::VectorXd> inst_basis;
  for (const ObjectInstance* o : objects) {
    const Eigen::VectorXd off = gaussian_vector(rng, params.dim).normalized();
    Eigen::VectorXd v = (category_[o->category] + params.instance_offset * off).normalized();
    instance_[o->id] = v;
    // Orthonormal span of the instance vectors, for the text jitter below.
    Eigen::VectorXd e = v;
    orthogonalize(e, inst_basis);
    if (e.norm() > 1e-9) inst_basis.push_back(e.normalized());
  }
  for (const ObjectInstance* o : objects) {
    Eigen::VectorXd j = gaussian_vector(rng, params.dim);
    orthogonalize(j, inst_basis);
    if (j.norm() > 1e-9) j.normalize();
    text_[o->text_description] = (instance_[o->id] + params.text_jitter * j).normalized();
  }
}

Eigen::VectorXd OracleFeatureSpace::hashed(const std::string& key) const {
  std::mt19937_64 rng(mix_seed(params_.seed, hash_string(key)));
  return gaussian_vector(rng, params_.dim).normalized();
}

Eigen::VectorXd OracleFeatureSpace::category(const std::string& name) const {
  const auto it = category_.find(name);
  return it != category_.end() ? it->second : hashed("category:" + name);
}

Eigen::VectorXd OracleFeatureSpace::text(const std::string& description) const {
  const auto it = text_.find(description);
  if (it != text_.end()) return it->second;
  const auto cat = category_.find(description);
  if (cat != category_.end()) return cat->second;
  return hashed("text:" + description);
}

const Eigen::VectorXd& OracleFeatureSpace::instance(int id) const {
  const auto it = instance_.find(id);
  if (it == instance_.end()) throw LookupError("no oracle feature for instance " + std::to_string(id));
  return it->second;
}

std::string OracleFeatureSpace::nearest_category(const Eigen::VectorXd& v) const {
  std::string best;
  double best_cos = -2.0;
  for (const auto& [name, c] : category_) {
    const double cs = c.dot(v);
    if (cs > best_cos) {
      best_cos = cs;
      best = name;
    }
  }
  return best;
}

PerceptionNoise parse_perception_mode(const std::string& mode) {
  PerceptionNoise n;
  if (mode == "oracle") return n;
  const std::string prefix = "oracle-noisy:";
  if (mode.rfind(prefix, 0) != 0) {
    throw ValidationError("unknown perception mode '" + mode +
                          "' (expected oracle or oracle-noisy:<sigma>,<dropout>)");
  }
  const std::string rest = mode.substr(prefix.size());
  const auto comma = rest.find(',');
  if (comma == std::string::npos) {
    throw ValidationError("perception mode '" + mode + "' needs <sigma>,<dropout>");
  }
  try {
    n.feature_sigma = std::stod(rest.substr(0, comma));
    n.dropout = std::stod(rest.substr(comma + 1));
  } catch (const std::exception&) {
    throw ValidationError("perception mode '" + mode + "' has a non-numeric parameter");
  }
  if (n.feature_sigma < 0 || n.dropout < 0 || n.dropout > 1) {
    throw ValidationError("perception mode '" + mode + "' out of range");
  }
  return n;
}

PerceptionProviders::PerceptionProviders(const Scene& scene, const FeatureSpaceParams& space,
                                         const PerceptionNoise& noise, std::uint64_t seed)
    : scene_(&scene), space_(scene, space), noise_(noise), seed_(seed) {
  if (noise.decoy_rate <= 0.0 || scene.objects.size() < 2) return;
  // Each impersonated instance gets one decoy among the objects of other
  // categories; the decoy's masks carry the target's exact feature while the
  // target's own masks are slightly perturbed, so memory queries for the
  // target rank the decoy first.
  std::mt19937_64 rng(mix_seed(seed, 0xDEC0));
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::vector<int> ids;
  for (const auto& o : scene.objects) ids.push_back(o.id);
  std::sort(ids.begin(), ids.end());
  std::vector<int> used;
  for (int target : ids) {
    if (U(rng) >= noise.decoy_rate) continue;
    if (std::find(used.begin(), used.end(), target) != used.end()) continue;
    const std::string& cat = scene.object(target).category;
    std::vector<int> pool;
    for (int id : ids) {
      if (id == target || scene.object(id).category == cat) continue;
      if (std::find(used.begin(), used.end(), id) != used.end()) continue;
      if (decoys_.count(id)) continue;
      pool.push_back(id);
    }
    if (pool.empty()) continue;
    const int source = pool[static_cast<std::size_t>(U(rng) * pool.size()) % pool.size()];
    decoys_[source] = target;
    used.push_back(source);
    used.push_back(target);
    Eigen::VectorXd j = gaussian_vector(rng, space_.dim());
    const Eigen::VectorXd& f = space_.instance(target);
    j -= j.dot(f) * f;
    impersonated_[target] = (f + 0.2 * j.normalized()).normalized();
  }
}

std::optional<int> PerceptionProviders::decoy_target(int id) const {
  const auto it = decoys_.find(id);
  if (it == decoys_.end()) return std::nullopt;
  return it->second;
}

Eigen::VectorXd PerceptionProviders::mask_feature(int instance_id, std::uint64_t key) const {
  Eigen::VectorXd f;
  if (const auto d = decoy_target(instance_id)) {
    f = space_.instance(*d);
  } else if (const auto it = impersonated_.find(instance_id); it != impersonated_.end()) {
    f = it->second;
  } else {
    f = space_.instance(instance_id);
  }
  return jitter(std::move(f), key);
}

Eigen::VectorXd PerceptionProviders::jitter(Eigen::VectorXd f, std::uint64_t key) const {
  if (noise_.feature_sigma > 0.0) {
    std::mt19937_64 rng(key);
    std::normal_distribution<double> n(0.0, noise_.feature_sigma / std::sqrt(double(f.size())));
    for (int i = 0; i < f.size(); ++i) f[i] += n(rng);
  }
  return f.normalized();
}

Eigen::VectorXd PerceptionProviders::encode_crop(int instance_id, std::uint64_t key) const {
  return jitter(space_.instance(instance_id), mix_seed(seed_ ^ 0xC40Bull, key));
}

std::vector<InstanceMask> PerceptionProviders::segment(const Observation& obs, int frame_key) const {
  const int w = obs.instance_ids.width(), h = obs.instance_ids.height();
  std::map<int, long> counts;
  for (int p = 0; p < w * h; ++p) {
    const int id = obs.instance_ids.at(p);
    if (id != 0) ++counts[id];
  }
  const std::uint64_t frame_seed = mix_seed(seed_, static_cast<std::uint64_t>(frame_key));
  std::mt19937_64 rng(frame_seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::vector<InstanceMask> out;
  for (const auto& [id, n] : counts) {
    const double drop = U(rng);
    if (n < min_pixels || !space_.has_instance(id)) continue;
    if (drop < noise_.dropout) continue;
    InstanceMask m;
    m.frame = frame_key;
    m.width = w;
    m.height = h;
    m.pixels.assign(w * h, 0);
    for (int p = 0; p < w * h; ++p) m.pixels[p] = obs.instance_ids.at(p) == id;
    m.area = n;
    m.instance_id_hint = id;
    m.feature_2d = mask_feature(id, mix_seed(frame_seed, static_cast<std::uint64_t>(id)));
    out.push_back(std::move(m));
  }
  if (noise_.false_positive_rate > 0.0 && U(rng) < noise_.false_positive_rate) {
    // A spurious segment over a background patch with an arbitrary feature.
    const int pw = std::max(4, w / 8), ph = std::max(4, h / 8);
    const int c0 = static_cast<int>(U(rng) * (w - pw)), r0 = static_cast<int>(U(rng) * (h - ph));
    InstanceMask m;
    m.frame = frame_key;
    m.width = w;
    m.height = h;
    m.pixels.assign(w * h, 0);
    for (int r = r0; r < r0 + ph; ++r) {
      for (int c = c0; c < c0 + pw; ++c) {
        if (obs.instance_ids(r, c) == 0) {
          m.pixels[r * w + c] = 1;
          ++m.area;
        }
      }
    }
    std::mt19937_64 frng(mix_seed(frame_seed, 0xFA15E));
    m.feature_2d = gaussian_vector(frng, space_.dim()).normalized();
    if (m.area >= min_pixels) out.push_back(std::move(m));
  }
  return out;
}

Eigen::VectorXd PerceptionProviders::encode_text(const std::string& text) const {
  if (text.empty()) throw PreconditionError("encode_text: empty text");
  return space_.text(text);
}

Eigen::VectorXd PerceptionProviders::encode_image(const GoalImage& image) const {
  std::map<int, long> counts;
  for (int id : image.instance_ids.raw()) {
    if (id != 0) ++counts[id];
  }
  if (counts.empty()) throw PreconditionError("encode_image: goal image shows no instance");
  const auto best = std::max_element(counts.begin(), counts.end(), [](const auto& a, const auto& b) {
    return a.second < b.second || (a.second == b.second && a.first > b.first);
  });
  return space_.instance(best->first);
}

GoalQuery encode_goal(const Goal& goal, const PerceptionProviders& providers) {
  GoalQuery q;
  q.modality = goal.modality;
  switch (goal.modality) {
    case GoalModality::Category:
    case GoalModality::Text:
      if (goal.text.empty()) throw PreconditionError("encode_goal: empty payload");
      q.embedding = providers.encode_text(goal.text);
      break;
    case GoalModality::Image:
      if (goal.image.instance_ids.empty()) throw PreconditionError("encode_goal: empty image");
      q.embedding = providers.encode_image(goal.image);
      break;
  }
  q.embedding.normalize();
  return q;
}

}  // namespace gsnav
