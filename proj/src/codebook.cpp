#include "gsnav/codebook.hpp"

#include "binary_io.hpp"
#include "gsnav/camera.hpp"
#include "gsnav/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace gsnav {

namespace {

constexpr char kMagic[4] = {'G', 'S', 'N', 'C'};
constexpr std::uint32_t kSchemaVersion = 1;

}  // namespace

std::size_t Codebook::labeled_count() const {
  return std::count_if(entries.begin(), entries.end(),
                       [](const CodebookEntry& e) { return e.instance_feature.has_value(); });
}

CodebookBuild build_codebook(const GaussianMemory& memory, const CodebookParams& params) {
  if (memory.empty()) throw PreconditionError("build_codebook: memory is empty");
  if (params.k1 < 1 || params.k2 < 1) throw ValidationError("build_codebook: k1 and k2 must be positive");
  const auto& gs = memory.gaussians();
  const int n = static_cast<int>(gs.size()), d = memory.feature_dim();

  CodebookBuild out;
  Codebook& cb = out.codebook;
  cb.k1 = params.k1;
  cb.k2 = params.k2;
  cb.seed = params.seed;
  int k1 = params.k1;
  if (n < k1) {
    cb.warnings.push_back("only " + std::to_string(n) + " Gaussians; k1 reduced from " +
                          std::to_string(k1));
    k1 = n;
  }

  Vec3 lo = gs[0].mu, hi = gs[0].mu;
  for (const Gaussian& g : gs) {
    lo = lo.cwiseMin(g.mu);
    hi = hi.cwiseMax(g.mu);
  }
  double diag = params.scene_diagonal > 0 ? params.scene_diagonal : (hi - lo).norm();
  if (diag <= 0) diag = 1.0;

  Eigen::MatrixXd joint(n, 3 + d);
  for (int i = 0; i < n; ++i) {
    joint.row(i).head<3>() = (params.w_pos * (gs[i].mu - lo) / diag).transpose();
    joint.row(i).tail(d) = gs[i].feature.transpose();
  }
  KMeansParams kp;
  kp.k = k1;
  kp.max_iters = params.max_iters;
  kp.seed = params.seed;
  const KMeansResult coarse = kmeans(joint, kp);
  out.coarse_objective = coarse.objective;

  std::vector<std::vector<int>> groups(coarse.centroids.rows());
  for (int i = 0; i < n; ++i) groups[coarse.assignment[i]].push_back(i);
  for (std::size_t c = 0; c < groups.size(); ++c) {
    const auto& idx = groups[c];
    Eigen::MatrixXd feats(idx.size(), d);
    for (std::size_t j = 0; j < idx.size(); ++j) feats.row(j) = gs[idx[j]].feature.transpose();
    KMeansParams fp;
    fp.k = params.k2;
    fp.max_iters = params.max_iters;
    fp.seed = mix_seed(params.seed, c + 1);
    const KMeansResult fine = kmeans(feats, fp);
    out.fine_objectives.push_back(fine.objective);
    std::vector<CodebookEntry> local(fine.centroids.rows());
    for (std::size_t j = 0; j < idx.size(); ++j) local[fine.assignment[j]].members.push_back(idx[j]);
    for (Eigen::Index f = 0; f < fine.centroids.rows(); ++f) {
      CodebookEntry& e = local[f];
      e.coarse = static_cast<int>(c);
      e.feature_centroid = fine.centroids.row(f).transpose();
      for (int m : e.members) e.centroid_3d += gs[m].mu;
      e.centroid_3d /= static_cast<double>(e.members.size());
      cb.entries.push_back(std::move(e));
    }
  }
  return out;
}

std::vector<std::vector<int>> entry_silhouettes(const Codebook& codebook,
                                                const GaussianMemory& memory,
                                                const Observation& obs,
                                                const AssociationParams& params) {
  const CameraIntrinsics cam = camera_of(obs);
  const int w = cam.width, h = cam.height, npix = w * h;
  const CameraFrame frame = CameraFrame::from_pose(obs.pose);
  const double f = cam.focal();
  const double eps = std::exp(-0.5 * params.cutoff_sigma * params.cutoff_sigma);
  const double scale = 1.0 / (1.0 - eps);
  const double log_keep = std::log(1.0 - params.silhouette_alpha);
  const auto& gs = memory.gaussians();

  std::vector<std::vector<int>> out(codebook.entries.size());
  // Log-transmittance of the current entry; touched pixels are reset after use.
  std::vector<double> log_t(npix, 0.0);
  std::vector<int> touched;
  for (std::size_t e = 0; e < codebook.entries.size(); ++e) {
    touched.clear();
    for (int m : codebook.entries[e].members) {
      const Gaussian& g = gs[m];
      const Vec3 q = frame.to_camera(g.mu);
      if (q.z() <= 0.1) continue;
      const double sigma = f * g.radius / q.z();
      const double u = cam.cx() + f * q.x() / q.z();
      const double v = cam.cy() + f * q.y() / q.z();
      const double ext = params.cutoff_sigma * sigma;
      if (u + ext < 0 || u - ext > w || v + ext < 0 || v - ext > h) continue;
      const double range = (g.mu - frame.origin).norm();
      const int c0 = std::max(0, static_cast<int>(std::floor(u - ext - 0.5)));
      const int c1 = std::min(w - 1, static_cast<int>(std::ceil(u + ext - 0.5)));
      const int r0 = std::max(0, static_cast<int>(std::floor(v - ext - 0.5)));
      const int r1 = std::min(h - 1, static_cast<int>(std::ceil(v + ext - 0.5)));
      const double inv2s2 = 0.5 / (sigma * sigma);
      for (int row = r0; row <= r1; ++row) {
        const double dv = row + 0.5 - v;
        for (int col = c0; col <= c1; ++col) {
          const double du = col + 0.5 - u;
          const double fall = std::exp(-(du * du + dv * dv) * inv2s2);
          if (fall <= eps) continue;
          const int p = row * w + col;
          const float depth = obs.depth.at(p);
          if (valid_depth(depth) && range > depth + params.visibility_tolerance) continue;
          const double a = std::min(g.opacity * (fall - eps) * scale, 1.0 - 1e-12);
          if (a <= 0.0) continue;
          if (log_t[p] == 0.0) touched.push_back(p);
          log_t[p] += std::log1p(-a);
        }
      }
    }
    std::sort(touched.begin(), touched.end());
    for (int p : touched) {
      if (log_t[p] < log_keep) out[e].push_back(p);
      log_t[p] = 0.0;
    }
  }
  return out;
}

void associate_2d3d(Codebook& codebook, const GaussianMemory& memory,
                    const std::vector<Observation>& frames, const PerceptionProviders& providers,
                    const AssociationParams& params) {
  const std::size_t ne = codebook.entries.size();
  const int dim = providers.dim();
  std::vector<Eigen::VectorXd> sum(ne, Eigen::VectorXd::Zero(dim));
  std::vector<double> weight(ne, 0.0);
  std::vector<std::map<int, double>> votes(ne);
  for (std::size_t fi = 0; fi < frames.size(); ++fi) {
    const auto masks = providers.segment(frames[fi], static_cast<int>(fi));
    if (masks.empty()) continue;
    const auto sil = entry_silhouettes(codebook, memory, frames[fi], params);
    for (std::size_t e = 0; e < ne; ++e) {
      if (sil[e].empty()) continue;
      double best = 0.0;
      int best_m = -1;
      for (std::size_t k = 0; k < masks.size(); ++k) {
        long inter = 0;
        for (int p : sil[e]) inter += masks[k].pixels[p];
        if (inter == 0) continue;
        const double iou = static_cast<double>(inter) /
                           static_cast<double>(sil[e].size() + masks[k].area - inter);
        if (iou > best) {
          best = iou;
          best_m = static_cast<int>(k);
        }
      }
      if (best_m < 0 || best < params.min_iou) continue;
      sum[e] += best * masks[best_m].feature_2d;
      weight[e] += best;
      votes[e][masks[best_m].instance_id_hint.value_or(0)] += best;
    }
  }
  codebook.embedding_dim = dim;
  for (std::size_t e = 0; e < ne; ++e) {
    CodebookEntry& entry = codebook.entries[e];
    entry.instance_feature.reset();
    entry.matched_instance.reset();
    if (weight[e] <= 0.0 || sum[e].norm() < 1e-12) continue;
    entry.instance_feature = sum[e].normalized();
    const auto top = std::max_element(votes[e].begin(), votes[e].end(),
                                      [](const auto& a, const auto& b) { return a.second < b.second; });
    if (top->first != 0) entry.matched_instance = top->first;
  }
}

void save_codebook(const std::filesystem::path& path, const Codebook& codebook) {
  BinaryWriter w(path);
  w.bytes(kMagic, 4);
  w.u32(kSchemaVersion);
  w.u64(codebook.entries.size());
  for (const CodebookEntry& e : codebook.entries) {
    w.u32(static_cast<std::uint32_t>(e.feature_centroid.size()));
    w.vec(e.feature_centroid);
    w.vec(e.centroid_3d);
    w.u64(e.members.size());
    for (int m : e.members) w.u32(static_cast<std::uint32_t>(m));
    w.u8(e.instance_feature ? 1 : 0);
    if (e.instance_feature) {
      w.u32(static_cast<std::uint32_t>(e.instance_feature->size()));
      w.vec(*e.instance_feature);
    }
    w.u32(static_cast<std::uint32_t>(e.coarse));
  }
  w.u32(static_cast<std::uint32_t>(codebook.k1));
  w.u32(static_cast<std::uint32_t>(codebook.k2));
  w.u32(static_cast<std::uint32_t>(codebook.embedding_dim));
  w.u64(codebook.seed);
  w.finish();
}

Codebook load_codebook(const std::filesystem::path& path) {
  BinaryReader r(path);
  r.expect_magic(kMagic);
  const std::uint32_t version = r.u32();
  if (version != kSchemaVersion) {
    throw SchemaError(path.string() + ": unsupported codebook schema version " +
                      std::to_string(version));
  }
  Codebook cb;
  cb.entries.resize(r.u64());
  for (auto& e : cb.entries) {
    e.feature_centroid = r.vecx(static_cast<int>(r.u32()));
    e.centroid_3d = r.vec3();
    e.members.resize(r.u64());
    for (auto& m : e.members) m = static_cast<int>(r.u32());
    if (r.u8()) e.instance_feature = r.vecx(static_cast<int>(r.u32()));
    e.coarse = static_cast<int>(r.u32());
  }
  cb.k1 = static_cast<int>(r.u32());
  cb.k2 = static_cast<int>(r.u32());
  cb.embedding_dim = static_cast<int>(r.u32());
  cb.seed = r.u64();
  r.expect_end();
  for (const auto& e : cb.entries) {
    if (e.instance_feature && e.instance_feature->size() != cb.embedding_dim) {
      throw SchemaError(path.string() + ": instance feature size does not match the header");
    }
  }
  return cb;
}

}  // namespace gsnav
