#ifndef BMID_ENSEMBLE_HPP
#define BMID_ENSEMBLE_HPP

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <json.hpp>

#include "bmid/rng.hpp"

namespace bmid {

/// Worker count: --threads flag if given, else the BMID_THREADS environment
/// variable, else hardware concurrency.
inline unsigned default_thread_count() {
  if (const char* env = std::getenv("BMID_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<unsigned>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

/// One ensemble of independent replicas. Replica r draws from stream
/// stream_base + r of the shared seed, so the result is a pure function of
/// (seed, spec) no matter how many workers run it.
struct EnsembleSpec {
  std::vector<std::string> columns;  // functional names, fixed order
  std::size_t replicas = 0;
  std::uint64_t seed = 0;
  std::uint64_t stream_base = 0;
  unsigned threads = 0;                 // 0 = default_thread_count()
  std::filesystem::path partial_path;   // empty = no per-replica persistence
  std::uint64_t cancel_after = 0;       // test hook: stop after this many completions
};

struct EnsembleData {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;  // rows[r] = functional values of replica r
  std::vector<char> done;
  std::size_t computed = 0;  // replicas computed in this call (excludes resumed ones)

  bool complete() const {
    for (char d : done)
      if (!d) return false;
    return true;
  }

  std::vector<double> column(std::string_view name) const {
    std::size_t idx = columns.size();
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) idx = i;
    if (idx == columns.size()) throw std::invalid_argument("unknown ensemble column");
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& row : rows) out.push_back(row[idx]);
    return out;
  }
};

using ReplicaFn = std::function<void(std::uint64_t replica, RngStream& rng, std::span<double> out)>;

namespace detail {

/// Appends completed replicas to the partial file in replica order no matter
/// which worker finishes first, so the file bytes are schedule-independent.
class OrderedWriter {
 public:
  OrderedWriter(const std::filesystem::path& path, std::vector<char> already_done)
      : enabled_(!path.empty()), skip_done_(std::move(already_done)) {
    if (!enabled_) return;
    if (const auto dir = path.parent_path(); !dir.empty()) std::filesystem::create_directories(dir);
    out_.open(path, std::ios::app);
    if (!out_) throw std::runtime_error("cannot open partial file: " + path.string());
    advance_cursor();
  }

  void push(std::size_t replica, const std::vector<double>& row) {
    if (!enabled_) return;
    std::lock_guard<std::mutex> lock(mu_);
    pending_.emplace(replica, row);
    while (!pending_.empty() && pending_.begin()->first == cursor_) {
      nlohmann::json line;
      line["r"] = pending_.begin()->first;
      line["v"] = pending_.begin()->second;
      out_ << line.dump() << '\n';
      out_.flush();
      pending_.erase(pending_.begin());
      ++cursor_;
      advance_cursor();
    }
  }

 private:
  void advance_cursor() {
    while (cursor_ < skip_done_.size() && skip_done_[cursor_]) ++cursor_;
  }

  bool enabled_ = false;
  std::vector<char> skip_done_;  // replicas already persisted before this run
  std::ofstream out_;
  std::mutex mu_;
  std::map<std::size_t, std::vector<double>> pending_;
  std::size_t cursor_ = 0;
};

}  // namespace detail

/// Resume state from an earlier partial file, if present.
inline void load_partials(const std::filesystem::path& path, EnsembleData& data) {
  if (path.empty() || !std::filesystem::exists(path)) return;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    const std::size_t r = j.at("r").get<std::size_t>();
    const auto v = j.at("v").get<std::vector<double>>();
    if (r >= data.rows.size() || v.size() != data.columns.size())
      throw std::runtime_error("partial file does not match the ensemble spec: " + path.string());
    data.rows[r] = v;
    data.done[r] = 1;
  }
}

inline EnsembleData run_ensemble(const ReplicaFn& fn, const EnsembleSpec& spec) {
  if (spec.replicas == 0) throw std::invalid_argument("run_ensemble: replicas must be >= 1");
  EnsembleData data;
  data.columns = spec.columns;
  data.rows.assign(spec.replicas, std::vector<double>(spec.columns.size(), 0.0));
  data.done.assign(spec.replicas, 0);
  load_partials(spec.partial_path, data);

  detail::OrderedWriter writer(spec.partial_path,
                               spec.partial_path.empty() ? std::vector<char>{} : data.done);

  std::vector<std::size_t> todo;
  for (std::size_t r = 0; r < spec.replicas; ++r)
    if (!data.done[r]) todo.push_back(r);

  std::atomic<std::size_t> next{0};
  std::atomic<std::uint64_t> completions{0};
  std::atomic<bool> stop{false};
  std::mutex failure_mu;
  std::exception_ptr failure;

  const unsigned requested = spec.threads == 0 ? default_thread_count() : spec.threads;
  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(requested, std::max<std::size_t>(todo.size(), 1)));

  const auto work = [&]() {
    while (!stop.load(std::memory_order_relaxed)) {
      const std::size_t i = next.fetch_add(1);
      if (i >= todo.size()) return;
      const std::size_t r = todo[i];
      try {
        RngStream rng(spec.seed, spec.stream_base + r);
        fn(r, rng, std::span<double>(data.rows[r]));
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::current_exception();
        stop.store(true);
        return;
      }
      data.done[r] = 1;
      writer.push(r, data.rows[r]);
      const std::uint64_t c = completions.fetch_add(1) + 1;
      if (spec.cancel_after != 0 && c >= spec.cancel_after) stop.store(true);
    }
  };

  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  data.computed = completions.load();
  return data;
}

}  // namespace bmid

#endif  // BMID_ENSEMBLE_HPP
