#pragma once

// Collective operations among the p participants of one task.
//
// Every participant calls the same sequence of collectives. Reductions are
// summed in rank order by a single participant, so every rank sees the same
// bits and results are reproducible for a fixed p.

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <mutex>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace alch {

/// Thrown inside participants when another participant failed.
class CollectiveAborted : public std::exception {
  public:
    const char* what() const noexcept override { return "collective aborted"; }
};

class Communicator {
  public:
    explicit Communicator(int size);

    int size() const noexcept { return size_; }

    void barrier();
    /// In-place element-wise sum over all ranks; `data` has equal length everywhere.
    void allreduce_sum(int rank, std::span<double> data);
    /// Copies root's `data` into every other rank's `data` (resized).
    void broadcast(int rank, int root, std::vector<double>& data);

    void send(int from, int to, std::vector<double> data);
    std::vector<double> recv(int to, int from);

    /// Wakes every waiting participant with CollectiveAborted.
    void abort();
    bool aborted() const;

  private:
    void barrier_locked(std::unique_lock<std::mutex>& lock);

    const int size_;
    mutable std::mutex mutex_;
    std::condition_variable cv_;
    int arrived_ = 0;
    std::uint64_t generation_ = 0;
    bool aborted_ = false;

    std::vector<std::span<double>> slots_;
    std::vector<double> reduced_;
    std::vector<double>* bcast_source_ = nullptr;
    std::map<std::pair<int, int>, std::deque<std::vector<double>>> mailboxes_;
};

/// A participant's view of a Communicator.
class Comm {
  public:
    Comm(Communicator& comm, int rank) : comm_(&comm), rank_(rank) {}

    int rank() const noexcept { return rank_; }
    int size() const noexcept { return comm_->size(); }

    void barrier() { comm_->barrier(); }
    void allreduce_sum(std::span<double> data) { comm_->allreduce_sum(rank_, data); }
    double allreduce_sum(double value) {
        allreduce_sum(std::span<double>(&value, 1));
        return value;
    }
    void broadcast(std::vector<double>& data, int root = 0) { comm_->broadcast(rank_, root, data); }
    void send(int to, std::vector<double> data) { comm_->send(rank_, to, std::move(data)); }
    std::vector<double> recv(int from) { return comm_->recv(rank_, from); }

  private:
    Communicator* comm_;
    int rank_;
};

} // namespace alch
