#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "epimem/grid.hpp"
#include "epimem/projection.hpp"
#include "epimem/tour.hpp"

namespace epimem {

inline constexpr int kNumSegments = 20;

/// Half-open step ranges [begin, end) of the temporal segments of a tour of
/// `tour_length` steps. Lengths differ by at most one; the leading segments
/// take the remainder. With fewer steps than segments, step i is segment i
/// and the trailing segments are empty.
std::vector<std::pair<int, int>> segment_ranges(int tour_length);
int segment_of(int position, int tour_length);

/// Top-down episodic memory of one tour. `votes` holds kNumLabels counters
/// per cell (background included, so floor evidence competes with label
/// noise); it is empty for memories loaded from disk.
struct EpisodicMemory {
  GridSpec spec;
  int tour_length = 0;
  std::vector<std::uint32_t> votes;
  std::vector<std::uint16_t> decoded;
  std::vector<std::uint8_t> union_observed;
  std::vector<std::uint32_t> temporal;

  EpisodicMemory() = default;
  explicit EpisodicMemory(const GridSpec& s);

  std::uint32_t vote(std::size_t cell, int label) const {
    return votes[cell * kNumLabels + static_cast<std::size_t>(label)];
  }
  bool has_votes(std::size_t cell) const;
};

/// Incremental accumulation. Steps may be added in any order as long as each
/// carries its position in the full tour; segments are computed from
/// `tour_length`, so two builders over the halves of a tour can be merged.
class MemoryBuilder {
 public:
  MemoryBuilder(const GridSpec& spec, int tour_length);

  void add(const CellVotes& votes, const ObservedMask& observed, int position);
  void add(const Projection& p, int position) { add(p.votes, p.observed, position); }
  void merge(const MemoryBuilder& other);
  EpisodicMemory finish() const;

 private:
  EpisodicMemory memory_;
};

/// Accumulates an ordered list of per-step projections; position i in the
/// list is step i of the tour.
EpisodicMemory accumulate(const std::vector<Projection>& projections);

/// Plurality label per cell (ties go to the lower id); background where
/// nothing was observed. Instance labels are left empty.
SemanticGrid decode_semantic_map(const EpisodicMemory& memory);

struct ShortTour {
  std::string parent_id;
  int start_step = 0;
  int length = 20;
  GridSpec window;
  std::vector<Projection> projections;  // re-indexed into `window`
  std::size_t clipped_cells = 0;        // observed cells that fell outside
};

struct ShortTourOptions {
  int length = 20;
  int window_cells = 250;
};

/// Samples `count` distinct start steps and builds one fixed-size window per
/// short tour, centered on the bounding box of its observed cells and clamped
/// to the parent grid. `projections` are the full tour's per-step projections
/// on the scene grid.
std::vector<ShortTour> extract_short_tours(const Tour& tour,
                                           const std::vector<Projection>& projections,
                                           std::uint64_t seed, int count,
                                           const ShortTourOptions& options = {});

/// Restricts a scene-grid projection to `window`; returns the number of
/// observed cells dropped.
std::size_t restrict_projection(const Projection& in, const GridSpec& window, Projection& out);

/// Window of `rows` x `cols` centered on the bounding box of `cells`, clamped
/// so it stays inside `grid` when it fits.
GridSpec centered_window(const GridSpec& grid, const std::vector<std::uint32_t>& cells,
                         int rows, int cols);

/// Header line (JSON) followed by decoded (uint16), temporal (uint32) and
/// union (uint8) planes, little-endian.
void write_memory(std::ostream& out, const EpisodicMemory& memory);
EpisodicMemory read_memory(std::istream& in);

}  // namespace epimem
