// Copyright 2026 the bftchain authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include "bftchain/types.hpp"

#include <cstdint>

namespace bftchain
{

// Asynchronous storage stage of a replica: an ordered pipeline of append and
// whole-file write operations, with explicit sync barriers. Appends are
// durable only once a sync that was requested after them completes (or, in
// the background-flush configuration, once the auto flush containing them
// runs). Completion of sync(token) is delivered back through the replica's
// event loop, never inline.
class StorageStage
{
  public:
    virtual ~StorageStage() = default;

    virtual void appendLedger(Bytes framedRecord) = 0;

    // Whole-file replace of one of the two snapshot slots.
    virtual void writeSnapshot(unsigned slot, Bytes content) = 0;

    // Durable immediately on return; used only for per-view key material,
    // which changes rarely but must never lag the signatures made with it.
    virtual void writeKeyVault(Bytes content) = 0;

    virtual void sync(std::uint64_t token) = 0;

    // Recovery-time synchronous accessors.
    virtual Bytes readLedger() = 0;
    virtual Bytes readSnapshot(unsigned slot) = 0;
    virtual Bytes readKeyVault() = 0;
    virtual void truncateLedger(std::size_t newLength) = 0;

    // Number of physical flush operations performed (one flush covers every
    // append enqueued before it).
    virtual std::uint64_t flushCount() const = 0;
};

} // namespace bftchain
