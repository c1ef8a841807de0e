#pragma once

#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace archgraph {

// Static range split across `jobs` threads. Chunks are fixed by (count, jobs)
// alone, so any routine whose chunks write disjoint slots produces identical
// results for every job count.
inline void parallel_for(std::size_t count, unsigned jobs,
                         const std::function<void(std::size_t, std::size_t)>& body) {
  if (count == 0) return;
  if (jobs <= 1 || count < 2 * jobs) {
    body(0, count);
    return;
  }
  std::size_t chunk = (count + jobs - 1) / jobs;
  std::vector<std::thread> workers;
  workers.reserve(jobs);
  for (unsigned t = 0; t < jobs; ++t) {
    std::size_t begin = static_cast<std::size_t>(t) * chunk;
    if (begin >= count) break;
    std::size_t end = begin + chunk < count ? begin + chunk : count;
    workers.emplace_back(body, begin, end);
  }
  for (auto& w : workers) w.join();
}

}  // namespace archgraph
