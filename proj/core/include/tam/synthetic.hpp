#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "tam/dataset.hpp"
#include "tam/matrix.hpp"
#include "tam/rng.hpp"
#include "tam/sequence.hpp"

namespace tam {

enum class ConfoundMode {
  // Every class draws its own atoms.
  IndependentAtoms,
  // Classes in one atom set share the atoms and differ only in their order.
  PermutedAtoms,
};

struct GeneratorConfig {
  std::size_t num_classes = 25;
  std::size_t segments = 3;  // atoms per class template
  std::size_t dim = 16;
  std::size_t length = 8;  // frames per video
  double noise_sigma = 0.1;
  // Symmetric Dirichlet concentration of the segment-duration draw. Larger
  // values give more uniform durations; +inf gives equal durations.
  double warp_concentration = 1.0;
  ConfoundMode confound_mode = ConfoundMode::IndependentAtoms;
  // PermutedAtoms: class c uses atom set c / segments! with permutation
  // c % segments!. More classes than atom_sets * segments! is an error.
  std::size_t atom_sets = 1;
  std::size_t videos_per_class = 20;
  // Per-video background offset confined to a fixed random subspace of this
  // rank, with magnitude nuisance_scale. Off when either is zero.
  std::size_t nuisance_rank = 0;
  double nuisance_scale = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct ClassTemplate {
  int class_id = 0;
  Matrix atoms;  // segments x dim, unit rows, in temporal order
};

std::vector<ClassTemplate> generate_templates(const GeneratorConfig& cfg, Rng& rng);

// Integer segment durations, each >= 1, summing to cfg.length.
std::vector<std::size_t> sample_durations(const GeneratorConfig& cfg, Rng& rng);

// Warped noisy realization of a template.
FeatureSequence sample_video(const ClassTemplate& tmpl, const GeneratorConfig& cfg, Rng& rng);

// Same, with explicit segment durations (no duration draw).
FeatureSequence render_video(const ClassTemplate& tmpl, std::span<const std::size_t> durations,
                             const GeneratorConfig& cfg, Rng& rng);

// Class counts for meta-train / meta-val / meta-test in the 64:12:24 ratio
// by largest remainder. Throws InsufficientClasses if a split would be empty.
std::array<std::size_t, 3> split_sizes(std::size_t num_classes);

// Templates, videos and splits. Class ids are laid out meta_test first, then
// meta_val, then meta_train, so held-out classes fill whole permutation
// groups in PermutedAtoms mode.
Dataset build_dataset(const GeneratorConfig& cfg);

}  // namespace tam
