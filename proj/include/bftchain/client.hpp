// Copyright 2026 the bftchain authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include "bftchain/block.hpp"
#include "bftchain/messages.hpp"

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <vector>

namespace bftchain
{

// Surroundings of a client actor: virtual time, delivery, and one one-shot
// retransmission timer (token 0).
class ClientEnv
{
  public:
    virtual ~ClientEnv() = default;

    virtual std::uint64_t nowUs() = 0;
    virtual void sendMessage(ProcessId to, WireMessage msg) = 0;
    virtual void armTimer(std::uint32_t token, std::uint64_t delayUs) = 0;
    virtual void cancelTimer(std::uint32_t token) = 0;
};

struct ClientConfig
{
    ClientId self = 0;
    GenesisBlock genesis;
    // Replica processes to submit to; a superset of the actual membership is
    // fine since commitment only counts matching answers.
    std::vector<ProcessId> replicas;
    std::uint64_t retryTimeoutUs = 300'000;
};

// One closed-loop client: a single transaction in flight at a time, sent to
// every replica, retransmitted until more answers than the current fault
// bound agree bit-for-bit on the outcome.
class ClientSession
{
  public:
    struct Commit
    {
        std::uint64_t sequence = 0;
        BlockNum block = 0;
        std::uint32_t position = 0;
        Bytes result;
        std::uint64_t latencyUs = 0;
    };

    ClientSession(ClientConfig config, ClientEnv& env);

    // Starts the next transaction with the given application payload;
    // returns its sequence number. Requires idle().
    std::uint64_t submit(Bytes payload);
    // As above, for a pre-built transaction (must carry our id and the next
    // sequence, as makeCoinTransaction does).
    void submitTransaction(Transaction tx);

    void onMessage(WireMessage const& msg);
    void onTimer(std::uint32_t token);

    bool idle() const { return !mPending.has_value(); }
    std::uint64_t nextSequence() const { return mSeqIssued + 1; }
    // Fault bound currently assumed when counting matching replies.
    std::uint32_t believedFaults() const { return mBelievedF; }
    std::uint64_t retransmits() const { return mRetransmits; }
    // Distinct replicas whose reply matched the committed outcome of the
    // given sequence; keeps growing after commitment as stragglers answer.
    // Durability audits compare this against the quorum size.
    std::uint32_t matchesFor(std::uint64_t sequence) const;

    std::function<void(Commit const&)> onCommitted;

  private:
    struct Pending
    {
        Transaction tx;
        std::uint64_t sentAtUs = 0;
        std::map<Bytes, std::set<ProcessId>> votes;
    };

    void broadcastSubmit();

    ClientConfig mConfig;
    ClientEnv& mEnv;
    std::uint32_t mBelievedF;
    std::uint64_t mSeqIssued = 0;
    std::uint64_t mRetransmits = 0;
    std::optional<Pending> mPending;
    // sequence -> committed reply bytes + every replica that sent them
    std::map<std::uint64_t, std::pair<Bytes, std::set<ProcessId>>> mCommitted;
};

} // namespace bftchain
