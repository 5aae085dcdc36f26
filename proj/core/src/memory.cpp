#include "epimem/memory.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <istream>
#include <nlohmann/json.hpp>
#include <numeric>
#include <ostream>

#include "binary_io.hpp"
#include "epimem/error.hpp"
#include "epimem/log.hpp"
#include "epimem/rng.hpp"

namespace epimem {

std::vector<std::pair<int, int>> segment_ranges(int tour_length) {
  EPIMEM_CHECK(tour_length >= 0, "segment_ranges: negative tour length");
  std::vector<std::pair<int, int>> out;
  out.reserve(kNumSegments);
  if (tour_length < kNumSegments) {
    for (int s = 0; s < kNumSegments; ++s) {
      const int b = std::min(s, tour_length);
      out.emplace_back(b, s < tour_length ? b + 1 : b);
    }
    return out;
  }
  const int base = tour_length / kNumSegments;
  const int rem = tour_length % kNumSegments;
  int begin = 0;
  for (int s = 0; s < kNumSegments; ++s) {
    const int len = base + (s < rem ? 1 : 0);
    out.emplace_back(begin, begin + len);
    begin += len;
  }
  return out;
}

int segment_of(int position, int tour_length) {
  EPIMEM_CHECK(position >= 0 && position < tour_length,
               "segment_of: position " << position << " outside tour of " << tour_length);
  if (tour_length < kNumSegments) return position;
  const int base = tour_length / kNumSegments;
  const int rem = tour_length % kNumSegments;
  const int long_span = rem * (base + 1);
  if (position < long_span) return position / (base + 1);
  return rem + (position - long_span) / base;
}

EpisodicMemory::EpisodicMemory(const GridSpec& s)
    : spec(s),
      votes(s.size() * kNumLabels, 0),
      decoded(s.size(), kBackgroundId),
      union_observed(s.size(), 0),
      temporal(s.size(), 0) {}

bool EpisodicMemory::has_votes(std::size_t cell) const {
  const auto* v = &votes[cell * kNumLabels];
  return std::any_of(v, v + kNumLabels, [](std::uint32_t n) { return n > 0; });
}

MemoryBuilder::MemoryBuilder(const GridSpec& spec, int tour_length) : memory_(spec) {
  EPIMEM_CHECK(tour_length > 0, "MemoryBuilder: tour length must be positive");
  memory_.tour_length = tour_length;
}

void MemoryBuilder::add(const CellVotes& votes, const ObservedMask& observed, int position) {
  EPIMEM_CHECK(votes.spec == memory_.spec && observed.spec == memory_.spec,
               "accumulate: projections must share one grid");
  const std::uint32_t bit = 1u << segment_of(position, memory_.tour_length);
  for (const auto& e : votes.entries) {
    EPIMEM_CHECK(e.category < kNumLabels, "accumulate: label " << e.category << " out of range");
    memory_.votes[static_cast<std::size_t>(e.cell) * kNumLabels + e.category] += e.count;
  }
  for (auto c : observed.cells) {
    memory_.union_observed[c] = 1;
    memory_.temporal[c] |= bit;
  }
}

void MemoryBuilder::merge(const MemoryBuilder& other) {
  const auto& o = other.memory_;
  EPIMEM_CHECK(o.spec == memory_.spec && o.tour_length == memory_.tour_length,
               "MemoryBuilder::merge: grid or tour length mismatch");
  for (std::size_t i = 0; i < o.votes.size(); ++i) memory_.votes[i] += o.votes[i];
  for (std::size_t c = 0; c < o.temporal.size(); ++c) {
    memory_.union_observed[c] |= o.union_observed[c];
    memory_.temporal[c] |= o.temporal[c];
  }
}

EpisodicMemory MemoryBuilder::finish() const {
  EpisodicMemory m = memory_;
  for (std::size_t c = 0; c < m.decoded.size(); ++c) {
    const auto* v = &m.votes[c * kNumLabels];
    const auto* best = std::max_element(v, v + kNumLabels);  // first maximum
    m.decoded[c] = *best > 0 ? static_cast<std::uint16_t>(best - v) : kBackgroundId;
  }
  return m;
}

EpisodicMemory accumulate(const std::vector<Projection>& projections) {
  EPIMEM_CHECK(!projections.empty(), "accumulate: no projections");
  MemoryBuilder b(projections.front().votes.spec, static_cast<int>(projections.size()));
  for (std::size_t i = 0; i < projections.size(); ++i)
    b.add(projections[i], static_cast<int>(i));
  return b.finish();
}

SemanticGrid decode_semantic_map(const EpisodicMemory& memory) {
  SemanticGrid g(memory.spec);
  for (std::size_t c = 0; c < g.category.size(); ++c)
    if (memory.union_observed[c]) g.category[c] = memory.decoded[c];
  return g;
}

GridSpec centered_window(const GridSpec& grid, const std::vector<std::uint32_t>& cells,
                         int rows, int cols) {
  int rmin = grid.rows, rmax = -1, cmin = grid.cols, cmax = -1;
  for (auto i : cells) {
    const Cell c = grid.cell_at(i);
    rmin = std::min(rmin, c.row);
    rmax = std::max(rmax, c.row);
    cmin = std::min(cmin, c.col);
    cmax = std::max(cmax, c.col);
  }
  if (rmax < 0) {  // nothing observed: center on the grid
    rmin = 0;
    rmax = grid.rows - 1;
    cmin = 0;
    cmax = grid.cols - 1;
  }
  // Integer center of the box; the window's middle cell lands on it.
  int r0 = (rmin + rmax) / 2 - rows / 2;
  int c0 = (cmin + cmax) / 2 - cols / 2;
  r0 = std::clamp(r0, 0, std::max(0, grid.rows - rows));
  c0 = std::clamp(c0, 0, std::max(0, grid.cols - cols));
  return grid.window({r0, c0}, rows, cols);
}

std::size_t restrict_projection(const Projection& in, const GridSpec& window, Projection& out) {
  const GridSpec& g = in.votes.spec;
  EPIMEM_CHECK(window.cell_size == g.cell_size, "restrict_projection: cell size mismatch");
  const long r0 = std::lround((window.origin_z - g.origin_z) / g.cell_size);
  const long c0 = std::lround((window.origin_x - g.origin_x) / g.cell_size);
  auto map_cell = [&](std::uint32_t cell) -> long {
    const Cell c = g.cell_at(cell);
    const long r = c.row - r0;
    const long k = c.col - c0;
    if (r < 0 || k < 0 || r >= window.rows || k >= window.cols) return -1;
    return r * window.cols + k;
  };
  out = Projection{};
  out.votes.spec = window;
  out.votes.step_index = in.votes.step_index;
  out.observed.spec = window;
  out.observed.step_index = in.observed.step_index;
  // Row-major re-indexing of a row-major window keeps the sort order.
  for (const auto& e : in.votes.entries) {
    const long m = map_cell(e.cell);
    if (m >= 0) out.votes.entries.push_back({static_cast<std::uint32_t>(m), e.category, e.count});
  }
  std::size_t dropped = 0;
  for (auto cell : in.observed.cells) {
    const long m = map_cell(cell);
    if (m >= 0)
      out.observed.cells.push_back(static_cast<std::uint32_t>(m));
    else
      ++dropped;
  }
  return dropped;
}

std::vector<ShortTour> extract_short_tours(const Tour& tour,
                                           const std::vector<Projection>& projections,
                                           std::uint64_t seed, int count,
                                           const ShortTourOptions& options) {
  EPIMEM_CHECK(count >= 0, "extract_short_tours: negative count");
  EPIMEM_CHECK(options.length > 0 && options.window_cells > 0,
               "extract_short_tours: length and window must be positive");
  const int n = static_cast<int>(tour.poses.size());
  EPIMEM_CHECK(n >= options.length, "extract_short_tours: tour '" << tour.id << "' has " << n
                                                                  << " steps, need at least "
                                                                  << options.length);
  EPIMEM_CHECK(projections.size() == tour.poses.size(),
               "extract_short_tours: need one projection per step");
  std::vector<ShortTour> out;
  if (count == 0) return out;

  std::vector<int> starts(static_cast<std::size_t>(n - options.length + 1));
  std::iota(starts.begin(), starts.end(), 0);
  auto rng = keyed_rng(seed, RngStream::kShortTours);
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(count), starts.size());
  for (std::size_t i = 0; i < k; ++i) {  // partial Fisher-Yates
    std::uniform_int_distribution<std::size_t> pick(i, starts.size() - 1);
    std::swap(starts[i], starts[pick(rng)]);
  }
  starts.resize(k);
  if (k < static_cast<std::size_t>(count))
    warn("extract_short_tours: only " + std::to_string(k) + " distinct start steps available");

  const GridSpec& grid = projections.front().votes.spec;
  std::size_t clipped_total = 0;
  for (int start : starts) {
    ShortTour st;
    st.parent_id = tour.id;
    st.start_step = start;
    st.length = options.length;
    std::vector<std::uint32_t> cells;
    for (int i = start; i < start + options.length; ++i) {
      const auto& obs = projections[static_cast<std::size_t>(i)].observed.cells;
      cells.insert(cells.end(), obs.begin(), obs.end());
    }
    st.window = centered_window(grid, cells, options.window_cells, options.window_cells);
    st.projections.resize(static_cast<std::size_t>(options.length));
    for (int i = 0; i < options.length; ++i) {
      const auto& p = projections[static_cast<std::size_t>(start + i)];
      restrict_projection(p, st.window, st.projections[static_cast<std::size_t>(i)]);
    }
    // Distinct observed cells minus those that made it into the window.
    std::sort(cells.begin(), cells.end());
    cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
    std::vector<std::uint8_t> in_window(st.window.size(), 0);
    for (const auto& p : st.projections)
      for (auto c : p.observed.cells) in_window[c] = 1;
    st.clipped_cells =
        cells.size() - static_cast<std::size_t>(std::count(in_window.begin(), in_window.end(), 1));
    clipped_total += st.clipped_cells;
    out.push_back(std::move(st));
  }
  if (clipped_total > 0)
    warn("extract_short_tours: tour '" + tour.id + "': " + std::to_string(clipped_total) +
         " observed cells fell outside their " + std::to_string(options.window_cells) + "x" +
         std::to_string(options.window_cells) + " windows and were clipped");
  return out;
}

void write_memory(std::ostream& out, const EpisodicMemory& m) {
  nlohmann::json h;
  h["format"] = "epimem-memory";
  h["version"] = 1;
  h["grid"] = grid_to_json(m.spec);
  h["tour_length"] = m.tour_length;
  h["segments"] = kNumSegments;
  h["planes"] = {"decoded:uint16", "temporal:uint32", "union:uint8"};
  out << h.dump() << '\n';
  detail::put_plane(out, m.decoded);
  detail::put_plane(out, m.temporal);
  detail::put_plane(out, m.union_observed);
  EPIMEM_CHECK(out.good(), "write_memory: stream error");
}

EpisodicMemory read_memory(std::istream& in) {
  std::string line;
  EPIMEM_CHECK(std::getline(in, line), "read_memory: missing header");
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("read_memory: bad header: ") + e.what());
  }
  EPIMEM_CHECK(h.value("format", "") == "epimem-memory", "read_memory: not a memory file");
  EPIMEM_CHECK(h.value("segments", 0) == kNumSegments, "read_memory: unsupported segment count");
  EpisodicMemory m;
  try {
    m.spec = grid_from_json(h.at("grid"));
    m.tour_length = h.at("tour_length").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("read_memory: ") + e.what());
  }
  const std::size_t n = m.spec.size();
  m.decoded = detail::get_plane<std::uint16_t>(in, n);
  m.temporal = detail::get_plane<std::uint32_t>(in, n);
  m.union_observed = detail::get_plane<std::uint8_t>(in, n);
  return m;
}

}  // namespace epimem
