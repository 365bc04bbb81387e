// Copyright 2026 the bftchain authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include "bftchain/storage.hpp"
#include "bftchain/types.hpp"

#include <functional>
#include <string>

namespace bftchain
{

// Everything a replica needs from its surroundings: clock, network, timers,
// storage, and a signature-verification worker pool. The deterministic
// simulator and the socket runtime both implement this, so the protocol
// logic is byte-for-byte identical in tests and in deployment.
class ReplicaEnv
{
  public:
    virtual ~ReplicaEnv() = default;

    virtual std::uint64_t nowUs() = 0;

    // Fair-lossy point-to-point channel: messages between correct processes
    // are eventually delivered, unordered; delivery invokes
    // ReplicaNode::onMessage on the receiver.
    virtual void send(ProcessId to, Bytes frame) = 0;

    // One-shot timer; fires ReplicaNode::onTimer(token).
    virtual std::uint64_t setTimer(std::uint64_t delayUs) = 0;
    virtual void cancelTimer(std::uint64_t token) = 0;

    // Null when running the in-memory persistence variant.
    virtual StorageStage* storage() = 0;

    // Offloaded CPU-heavy validation (batch signature checks). Completion is
    // delivered as ReplicaNode::onVerifyComplete(token, ok).
    virtual void verifyAsync(std::uint64_t token,
                             std::function<bool()> task) = 0;

    // Deterministic in the simulator (seeded), system RNG elsewhere. Key
    // generation must route through this for reproducible runs.
    virtual void randomBytes(std::uint8_t* out, std::size_t n) = 0;

    // Unrecoverable protocol violation observed locally (invalid decision
    // proof, divergent chain). The environment stops the replica and flags
    // the run.
    virtual void halt(std::string const& reason) = 0;
};

} // namespace bftchain
