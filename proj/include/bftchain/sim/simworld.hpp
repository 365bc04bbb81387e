// Copyright 2026 the bftchain authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include "bftchain/client.hpp"
#include "bftchain/coin.hpp"
#include "bftchain/replica.hpp"

#include <functional>
#include <map>
#include <memory>
#include <queue>
#include <random>
#include <string>
#include <vector>

namespace bftchain::sim
{

// Scripted misbehaviors. Each one leaves the replica's protocol logic intact
// and manipulates what actually reaches the network or the disk, which is
// exactly the power a Byzantine process has.
enum class ByzantineScript : std::uint8_t
{
    NONE = 0,
    // As leader, send proposals that differ per recipient.
    EQUIVOCATE_PROPOSE = 1,
    // Never emit WRITE/ACCEPT/PERSIST votes.
    WITHHOLD_VOTES = 2,
    // Serve record streams and snapshots with flipped bytes.
    CORRUPT_STATE_TRANSFER = 3,
    // Keep erased consensus keys and, once removed, answer state transfer
    // with a re-certified alternative tip signed by those keys.
    RETAINED_KEY_FORK = 4,
};

// Links are fair: nothing between correct processes is ever dropped, only
// delayed -- wildly so before stabilization, within the bound after it.
struct LatencyModel
{
    std::uint64_t gstUs = 0; // before this, delays are wild
    std::uint64_t minDelayUs = 200;
    std::uint64_t maxDelayUs = 2'000;
    std::uint64_t preGstMaxDelayUs = 50'000;
};

struct SimConfig
{
    std::uint64_t seed = 1;
    std::uint32_t replicas = 4;
    std::uint32_t clients = 0;
    PersistenceVariant persistence = PersistenceVariant::STRONG;
    std::uint32_t checkpointPeriod = 16;
    JoinPolicyKind joinPolicy = JoinPolicyKind::ALLOW_ALL;
    LatencyModel latency;
    // Storage stage timing.
    std::uint64_t diskDelayUs = 300;
    std::uint64_t weakFlushIntervalUs = 50'000;
    std::uint32_t lambdaGroupSize = 8;
    // Chance that bytes past the durable prefix partially survive a crash.
    double tornTailProbability = 0.5;
    EngineConfig engine;
    std::uint64_t clientRetryUs = 300'000;
    std::uint64_t stRetryTimeoutUs = 400'000;
    std::uint64_t membershipRetryTimeoutUs = 500'000;
    std::uint64_t mintValue = 100;
    bool haltIsViolation = true;
    bool trace = false;
};

struct ReplicaOutcome
{
    bool exists = false;
    bool running = false; // process alive (any mode but crashed)
    ReplicaMode mode = ReplicaMode::OFFLINE;
    BlockNum highestFinished = 0;
    bool everFinished = false;
    bool ledgerFullyValid = false;
    std::int64_t ledgerLastComplete = -1;
    crypto::Digest stateDigest;
    std::uint64_t haltCount = 0;
};

struct ClientOutcome
{
    std::uint64_t committed = 0;
    std::uint64_t submitted = 0;
    std::uint64_t retransmits = 0;
    std::uint64_t okMints = 0;
    std::uint64_t okSpends = 0;
    std::uint64_t rejected = 0;
    bool done = false; // workload drained
};

struct SimResult
{
    std::vector<std::string> violations;
    std::map<ReplicaId, ReplicaOutcome> replicas;
    std::map<ProcessId, ClientOutcome> clients;
    std::uint64_t committedOps = 0;
    std::vector<std::uint64_t> commitLatenciesUs;
    std::uint64_t deliveredMessages = 0;
    std::uint64_t endTimeUs = 0;

    bool
    ok() const
    {
        return violations.empty();
    }
};

// Deterministic discrete-event execution of a whole deployment: replicas,
// clients, the network between them, disks, crashes, and scripted attacks.
// The same seed and schedule replay the same run bit for bit.
class SimWorld
{
  public:
    static constexpr ProcessId CLIENT_BASE = 1000;

    explicit SimWorld(SimConfig config);
    ~SimWorld();

    SimWorld(SimWorld const&) = delete;
    SimWorld& operator=(SimWorld const&) = delete;

    // --- schedule and fault injection ---
    void at(std::uint64_t timeUs, std::function<void()> fn);
    void crash(ReplicaId id);
    void recover(ReplicaId id);
    void fullStop(); // crash every running replica at once
    void corruptOwnStorage(ReplicaId id); // flip one durable ledger byte
    void setByzantine(ReplicaId id, ByzantineScript script);
    void isolate(ProcessId id, bool cut); // drop all traffic to and from id

    // Membership choreography. beginJoin spawns a brand-new replica process
    // with the given id and drives it through admission.
    void beginJoin(ReplicaId newId);
    void beginLeave(ReplicaId id);
    void castRemoveVotes(ReplicaId target); // every active member votes

    // Client `clientIndex` mints `mints` coins and, optionally, spends each
    // one once; a single transaction in flight at a time.
    void clientLoad(std::uint32_t clientIndex, std::uint32_t mints,
                    bool alsoSpend);

    // --- run ---
    SimResult run(std::uint64_t untilUs);

    // --- inspection ---
    std::uint64_t nowUs() const { return mNow; }
    GenesisBlock const& genesis() const { return mGenesis; }
    ReplicaNode* node(ReplicaId id);
    ClientSession* client(std::uint32_t clientIndex);
    bool running(ReplicaId id) const;
    Bytes ledgerBytes(ReplicaId id) const;        // live file content
    Bytes durableLedgerBytes(ReplicaId id) const; // crash-surviving prefix
    crypto::PermanentKeypair const& clientKey(std::uint32_t clientIndex) const;
    crypto::PermanentKeypair const& replicaKey(ReplicaId id) const;
    std::string const& traceLog() const { return mTrace; }
    std::vector<std::string> const& violations() const { return mViolations; }

    // Exposed for targeted tests: an alternative last block re-signed with
    // the supplied consensus keys (the retained-key forgery).
    static Bytes forgeAlternativeTip(
        Bytes const& ledger, GenesisBlock const& genesis,
        std::vector<crypto::ConsensusKeypair const*> const& keys);

  private:
    struct Event
    {
        std::uint64_t timeUs;
        std::uint64_t seq;
        std::function<void()> fn;
    };
    struct EventOrder
    {
        bool
        operator()(Event const& a, Event const& b) const
        {
            return a.timeUs != b.timeUs ? a.timeUs > b.timeUs
                                        : a.seq > b.seq;
        }
    };

    class ReplicaProc;
    class ClientProc;
    friend class ReplicaProc;
    friend class ClientProc;

    void schedule(std::uint64_t timeUs, std::function<void()> fn);
    void deliver(ProcessId from, ProcessId to, WireMessage msg);
    void routeSend(ProcessId from, ProcessId to, WireMessage msg);
    std::uint64_t drawNetDelay();
    bool chance(double p);
    void violation(std::string what);
    void traceLine(std::string const& line);
    void noteFinished(ReplicaId id, BlockNum block,
                      crypto::Digest const& hash);
    ReplicaProc* findReplica(ReplicaId id);
    ReplicaProc const* findReplica(ReplicaId id) const;
    ClientProc* findClient(ProcessId id);
    std::array<std::uint8_t, 32> derivedSeed(std::string const& tag,
                                             std::uint64_t a, std::uint64_t b);
    ReplicaProc& spawnReplica(ReplicaId id);

    SimConfig mConfig;
    std::mt19937_64 mRng;
    std::uint64_t mNow = 0;
    std::uint64_t mEventSeq = 0;
    std::priority_queue<Event, std::vector<Event>, EventOrder> mQueue;
    GenesisBlock mGenesis;
    AppConfig mAppConfig;
    std::map<ReplicaId, crypto::PermanentKeypair> mReplicaKeys;
    std::vector<crypto::PermanentKeypair> mClientKeys;
    std::map<ReplicaId, std::unique_ptr<ReplicaProc>> mReplicas;
    std::map<ProcessId, std::unique_ptr<ClientProc>> mClients;
    std::map<ProcessId, bool> mIsolated;
    std::map<BlockNum, std::pair<crypto::Digest, ReplicaId>> mFinishedHashes;
    std::vector<std::string> mViolations;
    std::vector<std::uint64_t> mLatencies;
    std::string mTrace;
    std::uint64_t mDelivered = 0;
};

} // namespace bftchain::sim
