#include "morphbench/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "morphbench/image.hpp"
#include "morphbench/rng.hpp"

namespace morphbench {

namespace {

SyntheticClass make_class(std::string name, int blobs, double radius, double axis_ratio,
                          double separation, double brightness, int arms,
                          std::map<std::string, std::vector<double>> conc) {
  SyntheticClass c;
  c.name = std::move(name);
  c.blobs = blobs;
  c.radius = radius;
  c.axis_ratio = axis_ratio;
  c.separation = separation;
  c.brightness = brightness;
  c.arms = arms;
  c.concentrations = std::move(conc);
  return c;
}

void splat(Image& img, double cy, double cx, double sy, double sx, double angle, double b) {
  // Rotated anisotropic Gaussian, evaluated over a bounded window.
  const double cosa = std::cos(angle);
  const double sina = std::sin(angle);
  const double extent = 3.5 * std::max(sx, sy);
  const int y0 = std::max(0, static_cast<int>(std::floor(cy - extent)));
  const int y1 = std::min(img.height - 1, static_cast<int>(std::ceil(cy + extent)));
  const int x0 = std::max(0, static_cast<int>(std::floor(cx - extent)));
  const int x1 = std::min(img.width - 1, static_cast<int>(std::ceil(cx + extent)));
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      const double dy = y - cy;
      const double dx = x - cx;
      const double u = dx * cosa + dy * sina;   // along the major axis
      const double v = -dx * sina + dy * cosa;  // along the minor axis
      img.at(y, x) += b * std::exp(-0.5 * (u * u / (sx * sx) + v * v / (sy * sy)));
    }
}

void render_galaxy(Image& img, const SyntheticClass& cls, Rng& rng, double noise) {
  const int side = img.height;
  const double jitter = 1.0 + cls.radius_jitter * (2.0 * rng.uniform() - 1.0);
  const double r = cls.radius * side * jitter;
  const double b =
      cls.brightness * (1.0 + cls.brightness_jitter * (2.0 * rng.uniform() - 1.0));
  const double cy =
      side / 2.0 + cls.position_jitter * side * (2.0 * rng.uniform() - 1.0);
  const double cx =
      side / 2.0 + cls.position_jitter * side * (2.0 * rng.uniform() - 1.0);

  if (cls.blobs <= 1) {
    splat(img, cy, cx, r * cls.axis_ratio, r, 0.0, b);
  } else {
    const double off = cls.separation * side / 2.0;
    for (int i = 0; i < cls.blobs; ++i) {
      const double dir = (i % 2 == 0) ? -1.0 : 1.0;
      splat(img, cy, cx + dir * off, r * cls.axis_ratio, r, 0.0, b);
    }
  }

  if (cls.arms > 0) {
    // Faint disk, bright bulge, then logarithmic spiral ridges.
    splat(img, cy, cx, 0.8 * r, 0.8 * r, 0.0, 0.25 * b);
    splat(img, cy, cx, 0.3 * r, 0.3 * r, 0.0, 0.9 * b);
    const double dab = 0.14 * r;
    for (int arm = 0; arm < cls.arms; ++arm) {
      const double phase = 2.0 * std::numbers::pi * arm / cls.arms;
      for (double t = 0.0; t < 2.2 * std::numbers::pi; t += 0.05) {
        const double rad = std::min(0.28 * r * std::exp(0.30 * t), 1.7 * r);
        const double y = cy + rad * std::sin(t + phase);
        const double x = cx + rad * std::cos(t + phase);
        splat(img, y, x, dab, dab, 0.0, 0.22 * b);
      }
    }
  }

  for (double& p : img.pixels) {
    if (noise > 0.0) p += noise * rng.normal();
    p = std::min(std::max(p, 0.0), 1.0);
  }
}

// One galaxy's votes: every question's voter pool is the set of upstream
// voters who picked one of its triggering answers; each pool votes
// multinomially on a per-galaxy Dirichlet draw.
std::vector<int> sample_votes(const SyntheticClass& cls, const DecisionTreeSchema& schema,
                              int root_voters, Rng& rng) {
  std::vector<int> votes(static_cast<size_t>(schema.total_answers()), 0);
  std::vector<int> voters(static_cast<size_t>(schema.num_questions()), 0);
  voters[static_cast<size_t>(schema.root())] = root_voters;
  for (int q = 0; q < schema.num_questions(); ++q) {
    const Question& question = schema.question(q);
    const int n_q = voters[static_cast<size_t>(q)];
    const int count = schema.num_answers(q);
    std::vector<double> alpha(static_cast<size_t>(count), 1.0);
    auto it = cls.concentrations.find(question.id);
    if (it != cls.concentrations.end()) alpha = it->second;

    // p ~ Dirichlet(alpha) via normalized gamma draws (drawn even for empty
    // pools to keep the stream layout fixed).
    std::vector<double> p(static_cast<size_t>(count));
    double total = 0.0;
    for (int a = 0; a < count; ++a) {
      p[static_cast<size_t>(a)] = rng.gamma(alpha[static_cast<size_t>(a)]);
      total += p[static_cast<size_t>(a)];
    }
    for (double& v : p) v /= total;

    for (int voter = 0; voter < n_q; ++voter) {
      double u = rng.uniform();
      int choice = count - 1;
      for (int a = 0; a < count; ++a) {
        u -= p[static_cast<size_t>(a)];
        if (u < 0.0) {
          choice = a;
          break;
        }
      }
      votes[static_cast<size_t>(schema.first_slot(q) + choice)] += 1;
    }

    // Feed descendant pools.
    for (int child = 0; child < schema.num_questions(); ++child) {
      const Question& cq = schema.question(child);
      if (cq.parent_question != q) continue;
      int pool = 0;
      for (int a : cq.parent_answers)
        pool += votes[static_cast<size_t>(schema.first_slot(q) + a)];
      voters[static_cast<size_t>(child)] = pool;
    }
  }
  return votes;
}

}  // namespace

SyntheticSpec default_synthetic_spec() {
  SyntheticSpec spec;
  spec.count = 100;
  spec.side = 64;
  spec.votes_per_galaxy = 40;
  spec.noise = 0.02;
  spec.seed = 11;
  spec.classes.push_back(make_class(
      "smooth-round", 1, 0.18, 1.0, 0.0, 0.9, 0,
      {{"smooth-or-featured", {51, 6, 3}},
       {"how-rounded", {51, 6, 3}},
       {"merging", {3, 3, 3, 51}}}));
  spec.classes.push_back(make_class(
      "edge-on-disk", 1, 0.26, 0.22, 0.0, 0.9, 0,
      {{"smooth-or-featured", {6, 51, 3}},
       {"disk-edge-on", {51, 9}},
       {"edge-on-bulge", {3, 9, 48}},
       {"merging", {3, 3, 3, 51}}}));
  spec.classes.push_back(make_class(
      "merger-pair", 2, 0.13, 1.0, 0.36, 0.85, 0,
      {{"smooth-or-featured", {48, 9, 3}},
       {"how-rounded", {9, 42, 9}},
       {"merging", {48, 6, 3, 3}}}));
  spec.classes.push_back(make_class(
      "two-arm-spiral", 1, 0.2, 1.0, 0.0, 0.55, 2,
      {{"smooth-or-featured", {6, 51, 3}},
       {"disk-edge-on", {9, 51}},
       {"has-spiral-arms", {54, 6}},
       {"bar", {6, 6, 48}},
       {"bulge-size", {3, 6, 9, 36, 6}},
       {"spiral-winding", {15, 36, 9}},
       {"spiral-arm-count", {3, 48, 3, 3, 1.5, 1.5}},
       {"merging", {3, 3, 3, 51}}}));
  return spec;
}

nlohmann::json spec_to_json(const SyntheticSpec& spec) {
  nlohmann::json j;
  j["count"] = spec.count;
  j["side"] = spec.side;
  j["votes_per_galaxy"] = spec.votes_per_galaxy;
  j["noise"] = spec.noise;
  j["seed"] = spec.seed;
  nlohmann::json classes = nlohmann::json::array();
  for (const SyntheticClass& c : spec.classes) {
    nlohmann::json cj;
    cj["name"] = c.name;
    cj["weight"] = c.weight;
    cj["blobs"] = c.blobs;
    cj["radius"] = c.radius;
    cj["axis_ratio"] = c.axis_ratio;
    cj["separation"] = c.separation;
    cj["brightness"] = c.brightness;
    cj["arms"] = c.arms;
    cj["radius_jitter"] = c.radius_jitter;
    cj["brightness_jitter"] = c.brightness_jitter;
    cj["position_jitter"] = c.position_jitter;
    cj["concentrations"] = c.concentrations;
    classes.push_back(std::move(cj));
  }
  j["classes"] = std::move(classes);
  return j;
}

SyntheticSpec spec_from_json(const nlohmann::json& j) {
  SyntheticSpec spec;
  if (j.value("preset", std::string()) == "four-class") spec = default_synthetic_spec();

  if (j.contains("count")) spec.count = j.at("count").get<int>();
  if (j.contains("side")) spec.side = j.at("side").get<int>();
  if (j.contains("votes_per_galaxy"))
    spec.votes_per_galaxy = j.at("votes_per_galaxy").get<int>();
  if (j.contains("noise")) spec.noise = j.at("noise").get<double>();
  if (j.contains("seed")) spec.seed = j.at("seed").get<uint64_t>();
  if (j.contains("classes")) {
    spec.classes.clear();
    for (const auto& cj : j.at("classes")) {
      SyntheticClass c;
      c.name = cj.at("name").get<std::string>();
      c.weight = cj.value("weight", 1.0);
      c.blobs = cj.value("blobs", 1);
      c.radius = cj.value("radius", 0.18);
      c.axis_ratio = cj.value("axis_ratio", 1.0);
      c.separation = cj.value("separation", 0.0);
      c.brightness = cj.value("brightness", 0.9);
      c.arms = cj.value("arms", 0);
      c.radius_jitter = cj.value("radius_jitter", 0.1);
      c.brightness_jitter = cj.value("brightness_jitter", 0.1);
      c.position_jitter = cj.value("position_jitter", 0.02);
      if (cj.contains("concentrations"))
        c.concentrations =
            cj.at("concentrations").get<std::map<std::string, std::vector<double>>>();
      spec.classes.push_back(std::move(c));
    }
  }

  if (spec.count < 1) throw std::runtime_error("synthetic spec: count must be >= 1");
  if (spec.side < 8) throw std::runtime_error("synthetic spec: side must be >= 8");
  if (spec.votes_per_galaxy < 3)
    throw std::runtime_error("synthetic spec: votes_per_galaxy must be >= 3");
  if (spec.noise < 0.0) throw std::runtime_error("synthetic spec: noise must be >= 0");
  if (spec.classes.empty()) throw std::runtime_error("synthetic spec: at least one class");
  for (const SyntheticClass& c : spec.classes) {
    if (c.weight <= 0.0)
      throw std::runtime_error("synthetic spec: class " + c.name + " needs a positive weight");
    for (const auto& [question, alpha] : c.concentrations)
      for (double a : alpha)
        if (!(a > 0.0))
          throw std::runtime_error("synthetic spec: class " + c.name + ", question " + question +
                                   ": concentrations must be positive");
  }
  return spec;
}

SyntheticSpec load_synthetic_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read synthetic spec " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("synthetic spec " + path.string() + ": " + e.what());
  }
  return spec_from_json(j);
}

SynthResult generate_synthetic(const SyntheticSpec& spec, const DecisionTreeSchema& schema,
                               const std::filesystem::path& out_dir) {
  // Re-validate through the JSON path so programmatic specs obey the same
  // invariants as file-loaded ones.
  SyntheticSpec checked = spec_from_json(spec_to_json(spec));

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error("cannot create " + out_dir.string() + ": " + ec.message());

  // Validate concentration lengths against the schema.
  for (const SyntheticClass& c : checked.classes)
    for (const auto& [question, alpha] : c.concentrations) {
      const int q = schema.question_index(question);
      if (q < 0)
        throw std::runtime_error("synthetic spec: class " + c.name + " votes on unknown question " +
                                 question);
      if (static_cast<int>(alpha.size()) != schema.num_answers(q))
        throw std::runtime_error("synthetic spec: class " + c.name + ", question " + question +
                                 ": expected " + std::to_string(schema.num_answers(q)) +
                                 " concentrations, got " + std::to_string(alpha.size()));
    }

  double total_weight = 0.0;
  for (const SyntheticClass& c : checked.classes) total_weight += c.weight;

  SynthResult result;
  result.catalog.schema = &schema;
  result.catalog.records.reserve(static_cast<size_t>(checked.count));
  result.class_of.reserve(static_cast<size_t>(checked.count));
  char name[64];
  for (int i = 0; i < checked.count; ++i) {
    Rng rng(hash_u64(checked.seed, hash_str(hash_u64(0, static_cast<uint64_t>(i)), "synth")));

    double pick = rng.uniform() * total_weight;
    size_t cls_idx = checked.classes.size() - 1;
    for (size_t c = 0; c < checked.classes.size(); ++c) {
      pick -= checked.classes[c].weight;
      if (pick < 0.0) {
        cls_idx = c;
        break;
      }
    }
    const SyntheticClass& cls = checked.classes[cls_idx];

    Image img = Image::zeros(checked.side, checked.side, 1);
    render_galaxy(img, cls, rng, checked.noise);
    std::snprintf(name, sizeof(name), "galaxy_%05d.mb", i);
    write_image(img, out_dir / name);

    GalaxyRecord rec;
    std::snprintf(name, sizeof(name), "synth-%05d", i);
    rec.id = name;
    std::snprintf(name, sizeof(name), "galaxy_%05d.mb", i);
    rec.image_ref = (out_dir / name).string();
    rec.votes = sample_votes(cls, schema, checked.votes_per_galaxy, rng);
    recompute_totals(rec, schema);
    result.catalog.records.push_back(std::move(rec));
    result.class_of.push_back(static_cast<int>(cls_idx));
  }

  save_catalog(result.catalog, out_dir / "catalog.csv");
  return result;
}

}  // namespace morphbench
