#include "tdvs/dataset.hpp"

#include <cmath>
#include <fstream>
#include <mutex>
#include <stdexcept>

#include "tdvs/parallel.hpp"
#include "tdvs/textio.hpp"

namespace tdvs {

namespace {

std::string sample_png_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "images/sample_%05d.png", index);
  return buf;
}

std::string rects_to_string(const std::vector<PixelRect>& rects) {
  std::string out;
  for (size_t i = 0; i < rects.size(); ++i) {
    if (i) out += ';';
    out += std::to_string(rects[i].x) + ':' + std::to_string(rects[i].y) + ':' +
           std::to_string(rects[i].w) + ':' + std::to_string(rects[i].h);
  }
  return out;
}

std::vector<PixelRect> rects_from_string(const std::string& s) {
  std::vector<PixelRect> rects;
  if (trim(s).empty()) return rects;
  for (const auto& item : split(s, ';')) {
    const auto parts = split(item, ':');
    if (parts.size() != 4) throw std::runtime_error("manifest: malformed occlusion rect '" + item + "'");
    rects.push_back({std::stoi(parts[0]), std::stoi(parts[1]), std::stoi(parts[2]), std::stoi(parts[3])});
  }
  return rects;
}

constexpr const char* kManifestColumns =
    "index,q1_mm,q2_mm,label1,label2,gain,gradient,occlusion_rects,png";

}  // namespace

DatasetManifest generate_dataset(const PlanarScene& scene, const RobotGeometry& geom,
                                 const CameraIntrinsics& intr, const DatasetGenConfig& cfg,
                                 const std::filesystem::path& out_dir,
                                 std::vector<std::pair<std::string, std::string>> extra_header) {
  namespace fs = std::filesystem;
  if (!cfg.spiral.valid()) throw std::invalid_argument("generate_dataset: invalid spiral config");
  if (!cfg.aug.valid()) throw std::invalid_argument("generate_dataset: invalid augmentation config");
  if (cfg.net_input_w <= 0 || cfg.net_input_h <= 0)
    throw std::invalid_argument("generate_dataset: network input size must be positive");

  const auto path = spiral_path(cfg.spiral);

  DatasetManifest manifest;
  manifest.header = {
      {"seed", std::to_string(cfg.seed)},
      {"spiral_amplitude_mm", num17(cfg.spiral.amplitude_mm)},
      {"spiral_periods", num17(cfg.spiral.periods)},
      {"spiral_samples", std::to_string(cfg.spiral.sample_count)},
      {"label_beta_per_mm", num17(cfg.labels.beta_per_mm)},
      {"net_input_w", std::to_string(cfg.net_input_w)},
      {"net_input_h", std::to_string(cfg.net_input_h)},
      {"camera_width_px", std::to_string(intr.width_px)},
      {"camera_height_px", std::to_string(intr.height_px)},
      {"camera_hfov_deg", num17(intr.horizontal_fov_deg)},
      {"robot_length_m", num17(geom.backbone_length_m)},
      {"robot_tendon_offset_m", num17(geom.tendon_offset_m)},
      {"plane_distance_m", num17(scene.plane_distance_m)},
      {"plane_halfwidth_m", num17(scene.plane_halfwidth_m)},
      {"aug_light_gain_min", num17(cfg.aug.lighting_gain_range[0])},
      {"aug_light_gain_max", num17(cfg.aug.lighting_gain_range[1])},
      {"aug_light_gradient_min", num17(cfg.aug.lighting_gradient_range[0])},
      {"aug_light_gradient_max", num17(cfg.aug.lighting_gradient_range[1])},
      {"aug_occlusion_count_min", std::to_string(cfg.aug.occlusion_count_range[0])},
      {"aug_occlusion_count_max", std::to_string(cfg.aug.occlusion_count_range[1])},
      {"aug_occlusion_frac_min", num17(cfg.aug.occlusion_area_fraction_range[0])},
      {"aug_occlusion_frac_max", num17(cfg.aug.occlusion_area_fraction_range[1])},
  };
  for (auto& kv : extra_header) manifest.header.push_back(std::move(kv));

  std::vector<fs::path> created;
  bool made_out_dir = false, made_images_dir = false;
  const fs::path images_dir = out_dir / "images";
  auto cleanup = [&]() {
    std::error_code ec;
    for (const auto& p : created) fs::remove(p, ec);
    if (made_images_dir) fs::remove(images_dir, ec);
    if (made_out_dir) fs::remove(out_dir, ec);
  };

  try {
    made_out_dir = fs::create_directories(out_dir);
    made_images_dir = fs::create_directories(images_dir);

    manifest.samples.resize(path.size());
    // Per-sample RNG streams keep generation order-independent.
    std::mutex created_mutex;
    parallel_for(
        static_cast<long long>(path.size()),
        [&](long long i) {
          const int index = static_cast<int>(i);
          DatasetSampleMeta& meta = manifest.samples[index];
          meta.index = index;
          meta.q = path[index];
          meta.label = label_of(meta.q, cfg.labels);
          Rng rng = Rng::stream(cfg.seed, "augment", static_cast<std::uint64_t>(index));
          meta.aug = sample_augmentation(cfg.aug, rng, intr.width_px, intr.height_px);
          meta.png = sample_png_name(index);

          const RigidPose pose = forward_kinematics(meta.q, geom);
          ImageBuffer frame = render(scene, pose, intr);
          frame = apply_augmentation(frame, meta.aug);
          frame = resize_bilinear(frame, cfg.net_input_w, cfg.net_input_h);

          const fs::path png_path = out_dir / meta.png;
          {
            std::scoped_lock lock(created_mutex);
            created.push_back(png_path);
          }
          write_png(frame, png_path);
        },
        cfg.threads);

    const fs::path manifest_path = out_dir / "manifest.csv";
    created.push_back(manifest_path);
    std::ofstream out(manifest_path, std::ios::binary);
    if (!out) throw std::runtime_error("generate_dataset: cannot write '" + manifest_path.string() + "'");
    for (const auto& [k, v] : manifest.header) out << "# " << k << " = " << v << "\n";
    out << kManifestColumns << "\n";
    for (const auto& m : manifest.samples) {
      out << m.index << ',' << num17(m.q.q1_mm) << ',' << num17(m.q.q2_mm) << ','
          << num17(m.label[0]) << ',' << num17(m.label[1]) << ',' << num17(m.aug.gain) << ','
          << num17(m.aug.gradient) << ',' << rects_to_string(m.aug.rects) << ',' << m.png << "\n";
    }
    out.flush();
    if (!out) throw std::runtime_error("generate_dataset: failed writing '" + manifest_path.string() + "'");
  } catch (...) {
    cleanup();
    throw;
  }
  return manifest;
}

DatasetManifest load_manifest(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path, std::ios::binary);
  if (!in) throw std::runtime_error("load_manifest: cannot open '" + manifest_path.string() + "'");
  DatasetManifest manifest;
  std::string line;
  bool saw_columns = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto body = std::string(trim(std::string_view(line).substr(1)));
      const auto eq = body.find('=');
      if (eq != std::string::npos) {
        manifest.header.emplace_back(std::string(trim(body.substr(0, eq))),
                                     std::string(trim(body.substr(eq + 1))));
      }
      continue;
    }
    if (!saw_columns) {
      if (line != kManifestColumns)
        throw std::runtime_error("load_manifest: unexpected column header '" + line + "'");
      saw_columns = true;
      continue;
    }
    const auto cols = split(line, ',');
    if (cols.size() != 9)
      throw std::runtime_error("load_manifest: malformed row '" + line + "'");
    DatasetSampleMeta m;
    m.index = std::stoi(cols[0]);
    m.q = {std::stod(cols[1]), std::stod(cols[2])};
    m.label = {std::stod(cols[3]), std::stod(cols[4])};
    m.aug.gain = std::stod(cols[5]);
    m.aug.gradient = std::stod(cols[6]);
    m.aug.rects = rects_from_string(cols[7]);
    m.png = cols[8];
    manifest.samples.push_back(std::move(m));
  }
  if (!saw_columns) throw std::runtime_error("load_manifest: '" + manifest_path.string() + "' has no data");
  return manifest;
}

TrainingSet load_training_set(const std::filesystem::path& dataset_dir) {
  const auto manifest = load_manifest(dataset_dir / "manifest.csv");
  if (manifest.samples.empty()) throw std::runtime_error("load_training_set: dataset is empty");

  TrainingSet set;
  const ImageBuffer first = read_png(dataset_dir / manifest.samples.front().png);
  set.width = first.width;
  set.height = first.height;
  const size_t stride = static_cast<size_t>(set.width) * set.height * 3;
  set.images.resize(stride * manifest.samples.size());
  set.labels.resize(manifest.samples.size());

  parallel_for(static_cast<long long>(manifest.samples.size()), [&](long long i) {
    const auto& m = manifest.samples[i];
    const ImageBuffer img = (i == 0) ? first : read_png(dataset_dir / m.png);
    if (img.width != set.width || img.height != set.height)
      throw std::runtime_error("load_training_set: inconsistent image size in '" + m.png + "'");
    std::copy(img.values.begin(), img.values.end(), set.images.begin() + i * stride);
    set.labels[i] = {static_cast<float>(m.label[0]), static_cast<float>(m.label[1])};
  });
  return set;
}

}  // namespace tdvs
