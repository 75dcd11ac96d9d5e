#include "collective.hpp"

#include <algorithm>

#include "error.hpp"

namespace alch {

Communicator::Communicator(int size) : size_(size), slots_(static_cast<std::size_t>(size)) {
    if (size < 1) throw Error(ErrorCode::InvalidArgument, "communicator size must be >= 1");
}

void Communicator::barrier_locked(std::unique_lock<std::mutex>& lock) {
    if (aborted_) throw CollectiveAborted{};
    const auto gen = generation_;
    if (++arrived_ == size_) {
        arrived_ = 0;
        ++generation_;
        cv_.notify_all();
        return;
    }
    cv_.wait(lock, [&] { return generation_ != gen || aborted_; });
    if (generation_ == gen) throw CollectiveAborted{};
}

void Communicator::barrier() {
    std::unique_lock lock(mutex_);
    barrier_locked(lock);
}

void Communicator::allreduce_sum(int rank, std::span<double> data) {
    if (size_ == 1) return;
    std::unique_lock lock(mutex_);
    slots_[static_cast<std::size_t>(rank)] = data;
    barrier_locked(lock);
    if (rank == 0) {
        const std::size_t n = data.size();
        for (const auto& s : slots_) {
            if (s.size() != n) {
                aborted_ = true;
                cv_.notify_all();
                throw Error(ErrorCode::Internal, "allreduce length differs across ranks");
            }
        }
        reduced_.assign(slots_[0].begin(), slots_[0].end());
        for (std::size_t r = 1; r < slots_.size(); ++r) {
            const auto& s = slots_[r];
            for (std::size_t i = 0; i < n; ++i) reduced_[i] += s[i];
        }
    }
    barrier_locked(lock);
    std::copy(reduced_.begin(), reduced_.end(), data.begin());
    barrier_locked(lock);
}

void Communicator::broadcast(int rank, int root, std::vector<double>& data) {
    if (size_ == 1) return;
    std::unique_lock lock(mutex_);
    if (rank == root) bcast_source_ = &data;
    barrier_locked(lock);
    if (rank != root) data = *bcast_source_;
    barrier_locked(lock);
}

void Communicator::send(int from, int to, std::vector<double> data) {
    std::lock_guard lock(mutex_);
    if (aborted_) throw CollectiveAborted{};
    mailboxes_[{from, to}].push_back(std::move(data));
    cv_.notify_all();
}

std::vector<double> Communicator::recv(int to, int from) {
    std::unique_lock lock(mutex_);
    auto& box = mailboxes_[{from, to}];
    cv_.wait(lock, [&] { return !box.empty() || aborted_; });
    if (box.empty()) throw CollectiveAborted{};
    auto data = std::move(box.front());
    box.pop_front();
    return data;
}

void Communicator::abort() {
    std::lock_guard lock(mutex_);
    aborted_ = true;
    cv_.notify_all();
}

bool Communicator::aborted() const {
    std::lock_guard lock(mutex_);
    return aborted_;
}

} // namespace alch
