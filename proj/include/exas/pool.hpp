#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <string>

#include "exas/time.hpp"
#include "exas/types.hpp"

namespace exas {

struct Lease {
    std::string lease_id;
    std::string experiment_id;
    ResourceVector amount;
    Timestamp acquired_at{};
};

struct PoolSnapshot {
    std::string pool_id;
    ResourceVector capacity;
    ResourceVector leased;
    std::map<std::string, Lease> active_leases;

    ResourceVector free() const noexcept { return capacity - leased; }
};

// Capacity accounting shared by all experiments. Each experiment holds
// disjoint leases, which is what isolates concurrent runs from each other.
// Every mutation is linearized under one mutex.
class ResourcePool {
  public:
    using Observer = std::function<void(const PoolSnapshot&)>;

    ResourcePool(std::string pool_id, ResourceVector capacity);

    // Throws InsufficientCapacity carrying the first axis that does not fit,
    // or ValidationError for an empty or negative amount.
    Lease allocate(const std::string& experiment_id, const ResourceVector& amount);

    // Idempotent; unknown ids leave the pool unchanged.
    PoolSnapshot release(const std::string& lease_id);

    PoolSnapshot snapshot() const;
    ResourceVector free() const;
    ResourceVector capacity() const noexcept { return capacity_; }
    const std::string& pool_id() const noexcept { return pool_id_; }

    // Called after every mutation, under the pool lock.
    void set_observer(Observer observer);

  private:
    PoolSnapshot snapshot_locked() const;
    void notify_locked();

    const std::string pool_id_;
    const ResourceVector capacity_;
    mutable std::mutex mutex_;
    ResourceVector leased_;
    std::map<std::string, Lease> leases_;
    std::uint64_t next_lease_ = 1;
    Observer observer_;
};

}  // namespace exas
