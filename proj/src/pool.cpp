#include "exas/pool.hpp"

#include <stdexcept>

#include "exas/errors.hpp"

namespace exas {

ResourcePool::ResourcePool(std::string pool_id, ResourceVector capacity)
  : pool_id_(std::move(pool_id)), capacity_(capacity) {
    if (!capacity_.non_negative()) throw ValidationError("pool capacity must be non-negative");
}

Lease ResourcePool::allocate(const std::string& experiment_id, const ResourceVector& amount) {
    if (!amount.non_negative() || !amount.any_positive()) {
        throw ValidationError("lease amount must be non-negative and positive on at least one axis: " +
                              amount.to_string());
    }
    std::lock_guard lock(mutex_);
    const auto available = capacity_ - leased_;
    if (auto axis = amount.first_exceeding_axis(available)) {
        throw InsufficientCapacity(std::string(*axis), "insufficient capacity on " + std::string(*axis) + ": requested " +
                                                           amount.to_string() + ", free " + available.to_string());
    }
    Lease lease{pool_id_ + "-lease-" + std::to_string(next_lease_++), experiment_id, amount, utc_now()};
    leased_ += amount;
    if (!leased_.fits_within(capacity_)) throw std::logic_error("pool over-committed");
    leases_.emplace(lease.lease_id, lease);
    notify_locked();
    return lease;
}

PoolSnapshot ResourcePool::release(const std::string& lease_id) {
    std::lock_guard lock(mutex_);
    auto it = leases_.find(lease_id);
    if (it != leases_.end()) {
        leased_ -= it->second.amount;
        leases_.erase(it);
        notify_locked();
    }
    return snapshot_locked();
}

PoolSnapshot ResourcePool::snapshot() const {
    std::lock_guard lock(mutex_);
    return snapshot_locked();
}

ResourceVector ResourcePool::free() const {
    std::lock_guard lock(mutex_);
    return capacity_ - leased_;
}

void ResourcePool::set_observer(Observer observer) {
    std::lock_guard lock(mutex_);
    observer_ = std::move(observer);
}

PoolSnapshot ResourcePool::snapshot_locked() const {
    return {pool_id_, capacity_, leased_, leases_};
}

void ResourcePool::notify_locked() {
    if (observer_) observer_(snapshot_locked());
}

}  // namespace exas
