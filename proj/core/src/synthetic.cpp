#include "tam/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "tam/error.hpp"

namespace tam {
namespace {

constexpr std::uint64_t kTemplateStream = 1;
constexpr std::uint64_t kVideoStream = 2;
constexpr std::uint64_t kNuisanceStream = 3;

std::size_t factorial_capped(std::size_t m) {
  std::size_t f = 1;
  for (std::size_t i = 2; i <= m; ++i) {
    if (f > std::numeric_limits<std::size_t>::max() / i) return std::numeric_limits<std::size_t>::max();
    f *= i;
  }
  return f;
}

std::vector<double> random_unit(std::size_t dim, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(dim);
  for (;;) {
    double ss = 0.0;
    for (double& x : v) {
      x = normal(rng);
      ss += x * x;
    }
    if (ss > 1e-12) {
      const double inv = 1.0 / std::sqrt(ss);
      for (double& x : v) x *= inv;
      return v;
    }
  }
}

Matrix random_atoms(std::size_t count, std::size_t dim, Rng& rng) {
  Matrix atoms(count, dim);
  for (std::size_t a = 0; a < count; ++a) {
    const auto v = random_unit(dim, rng);
    std::copy(v.begin(), v.end(), atoms.row(a).begin());
  }
  return atoms;
}

// Orthonormal basis (rows) of the background subspace, fixed by cfg.seed.
Matrix nuisance_basis(const GeneratorConfig& cfg) {
  Rng rng = derive_stream(cfg.seed, {kNuisanceStream});
  Matrix basis(cfg.nuisance_rank, cfg.dim);
  for (std::size_t r = 0; r < cfg.nuisance_rank; ++r) {
    for (;;) {
      auto v = random_unit(cfg.dim, rng);
      for (std::size_t p = 0; p < r; ++p) {
        double dot = 0.0;
        for (std::size_t k = 0; k < cfg.dim; ++k) dot += v[k] * basis(p, k);
        for (std::size_t k = 0; k < cfg.dim; ++k) v[k] -= dot * basis(p, k);
      }
      double ss = 0.0;
      for (double x : v) ss += x * x;
      if (ss < 1e-6) continue;
      const double inv = 1.0 / std::sqrt(ss);
      for (std::size_t k = 0; k < cfg.dim; ++k) basis(r, k) = v[k] * inv;
      break;
    }
  }
  return basis;
}

}  // namespace

void GeneratorConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidArgument, msg); };
  if (num_classes == 0) fail("num_classes must be positive");
  if (segments < 2) fail("segments must be at least 2");
  if (dim == 0) fail("dim must be positive");
  if (length < segments) fail("length must be at least the number of segments");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) fail("noise_sigma must be >= 0");
  if (!(warp_concentration > 0.0)) fail("warp_concentration must be positive");
  if (atom_sets == 0) fail("atom_sets must be positive");
  if (videos_per_class == 0) fail("videos_per_class must be positive");
  if (nuisance_rank > dim) fail("nuisance_rank cannot exceed dim");
  if (!(nuisance_scale >= 0.0) || !std::isfinite(nuisance_scale)) fail("nuisance_scale must be >= 0");
}

std::vector<ClassTemplate> generate_templates(const GeneratorConfig& cfg, Rng& rng) {
  cfg.validate();
  std::vector<ClassTemplate> out;
  out.reserve(cfg.num_classes);
  if (cfg.confound_mode == ConfoundMode::IndependentAtoms) {
    for (std::size_t c = 0; c < cfg.num_classes; ++c) {
      out.push_back({static_cast<int>(c), random_atoms(cfg.segments, cfg.dim, rng)});
    }
    return out;
  }

  const std::size_t group = factorial_capped(cfg.segments);
  const std::size_t sets_needed = (cfg.num_classes + group - 1) / group;
  if (sets_needed > cfg.atom_sets) {
    throw Error(ErrorCode::TooManyClasses,
                std::to_string(cfg.num_classes) + " classes need " + std::to_string(sets_needed) +
                    " atom sets of " + std::to_string(cfg.segments) + "! orderings, have " +
                    std::to_string(cfg.atom_sets));
  }
  std::size_t c = 0;
  for (std::size_t s = 0; s < sets_needed; ++s) {
    const Matrix shared = random_atoms(cfg.segments, cfg.dim, rng);
    std::vector<std::size_t> order(cfg.segments);
    std::iota(order.begin(), order.end(), 0);
    do {
      Matrix atoms(cfg.segments, cfg.dim);
      for (std::size_t a = 0; a < cfg.segments; ++a) {
        std::copy(shared.row(order[a]).begin(), shared.row(order[a]).end(), atoms.row(a).begin());
      }
      out.push_back({static_cast<int>(c), std::move(atoms)});
      ++c;
    } while (c < cfg.num_classes && c % group != 0 &&
             std::next_permutation(order.begin(), order.end()));
  }
  return out;
}

std::vector<std::size_t> sample_durations(const GeneratorConfig& cfg, Rng& rng) {
  const std::size_t m = cfg.segments;
  const std::size_t extra = cfg.length - m;
  std::vector<double> share(m, 1.0 / static_cast<double>(m));
  if (std::isfinite(cfg.warp_concentration)) {
    std::gamma_distribution<double> gamma(cfg.warp_concentration, 1.0);
    double total = 0.0;
    for (double& s : share) {
      s = gamma(rng);
      total += s;
    }
    if (total > 0.0) {
      for (double& s : share) s /= total;
    } else {
      std::fill(share.begin(), share.end(), 1.0 / static_cast<double>(m));
    }
  }
  // Largest remainder over the frames beyond the one-per-segment minimum;
  // ties go to the earlier segment.
  std::vector<std::size_t> counts(m, 1);
  std::vector<std::pair<double, std::size_t>> remainders(m);
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const double quota = share[i] * static_cast<double>(extra);
    const auto whole = static_cast<std::size_t>(std::floor(quota));
    counts[i] += whole;
    assigned += whole;
    remainders[i] = {quota - static_cast<double>(whole), i};
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t r = 0; assigned < extra; ++r, ++assigned) ++counts[remainders[r % m].second];
  return counts;
}

FeatureSequence render_video(const ClassTemplate& tmpl, std::span<const std::size_t> durations,
                             const GeneratorConfig& cfg, Rng& rng) {
  if (durations.size() != tmpl.atoms.rows() ||
      std::accumulate(durations.begin(), durations.end(), std::size_t{0}) != cfg.length) {
    throw Error(ErrorCode::InvalidArgument, "durations must cover every segment and sum to length");
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix frames(cfg.length, cfg.dim);
  std::size_t t = 0;
  for (std::size_t s = 0; s < durations.size(); ++s) {
    const auto atom = tmpl.atoms.row(s);
    for (std::size_t f = 0; f < durations[s]; ++f, ++t) {
      auto out = frames.row(t);
      for (;;) {
        double ss = 0.0;
        for (std::size_t k = 0; k < cfg.dim; ++k) {
          out[k] = atom[k] + (cfg.noise_sigma > 0.0 ? cfg.noise_sigma * normal(rng) : 0.0);
          ss += out[k] * out[k];
        }
        if (ss > 1e-12) {
          const double inv = 1.0 / std::sqrt(ss);
          for (double& x : out) x *= inv;
          break;
        }
      }
    }
  }
  if (cfg.nuisance_rank > 0 && cfg.nuisance_scale > 0.0) {
    const Matrix basis = nuisance_basis(cfg);
    std::vector<double> offset(cfg.dim, 0.0);
    const double coef_scale = cfg.nuisance_scale / std::sqrt(static_cast<double>(cfg.nuisance_rank));
    for (std::size_t r = 0; r < cfg.nuisance_rank; ++r) {
      const double g = coef_scale * normal(rng);
      for (std::size_t k = 0; k < cfg.dim; ++k) offset[k] += g * basis(r, k);
    }
    for (std::size_t f = 0; f < cfg.length; ++f) {
      auto row = frames.row(f);
      for (std::size_t k = 0; k < cfg.dim; ++k) row[k] += offset[k];
    }
  }
  return FeatureSequence(std::move(frames));
}

FeatureSequence sample_video(const ClassTemplate& tmpl, const GeneratorConfig& cfg, Rng& rng) {
  cfg.validate();
  const auto durations = sample_durations(cfg, rng);
  return render_video(tmpl, durations, cfg, rng);
}

std::array<std::size_t, 3> split_sizes(std::size_t num_classes) {
  constexpr std::array<double, 3> ratio{64.0, 12.0, 24.0};
  std::array<std::size_t, 3> sizes{};
  std::array<std::pair<double, std::size_t>, 3> remainders{};
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double quota = static_cast<double>(num_classes) * ratio[i] / 100.0;
    sizes[i] = static_cast<std::size_t>(std::floor(quota));
    assigned += sizes[i];
    remainders[i] = {quota - static_cast<double>(sizes[i]), i};
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t r = 0; assigned < num_classes; ++r, ++assigned) ++sizes[remainders[r].second];
  if (sizes[0] == 0 || sizes[1] == 0 || sizes[2] == 0) {
    throw Error(ErrorCode::InsufficientClasses,
                std::to_string(num_classes) + " classes leave a split empty");
  }
  return sizes;
}

Dataset build_dataset(const GeneratorConfig& cfg) {
  cfg.validate();
  const auto sizes = split_sizes(cfg.num_classes);
  Rng template_rng = derive_stream(cfg.seed, {kTemplateStream});
  const auto templates = generate_templates(cfg, template_rng);

  Dataset ds;
  ds.dim = cfg.dim;
  ds.length = cfg.length;
  for (const auto& tmpl : templates) {
    ClassRecord rec;
    rec.class_id = tmpl.class_id;
    rec.name = "class_" + std::to_string(tmpl.class_id);
    for (std::size_t v = 0; v < cfg.videos_per_class; ++v) {
      Rng rng = derive_stream(cfg.seed, {kVideoStream, static_cast<std::uint64_t>(tmpl.class_id), v});
      rec.videos.push_back(sample_video(tmpl, cfg, rng));
    }
    ds.classes.push_back(std::move(rec));
  }
  int id = 0;
  for (std::size_t i = 0; i < sizes[2]; ++i) ds.splits.meta_test.push_back(id++);
  for (std::size_t i = 0; i < sizes[1]; ++i) ds.splits.meta_val.push_back(id++);
  for (std::size_t i = 0; i < sizes[0]; ++i) ds.splits.meta_train.push_back(id++);
  return ds;
}

}  // namespace tam
