// Copyright 2026 the bftchain authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include "bftchain/block.hpp"
#include "bftchain/messages.hpp"
#include "bftchain/reconfig.hpp"
#include "bftchain/transaction.hpp"
#include "bftchain/view.hpp"

#include <deque>
#include <map>
#include <optional>
#include <set>
#include <vector>

namespace bftchain
{

struct EngineConfig
{
    std::uint32_t maxBatch = 512;
    std::uint64_t batchTimeoutUs = 5'000;
    std::uint64_t progressTimeoutUs = 200'000; // doubles per rotation
    std::uint32_t bufferWindow = 8; // instances ahead we hold messages for
    std::uint32_t decisionCache = 8; // past decisions kept for stragglers
};

enum class EngineTimer : std::uint8_t
{
    BATCH = 0,
    PROGRESS = 1,
};

// Everything the ordering engine needs from the replica around it. One
// instance runs at a time; the host opens the next instance once the
// previous block is closed, which also guarantees every open instance is
// validated against the same executed prefix at every correct replica.
class EngineHost
{
  public:
    virtual ~EngineHost() = default;

    virtual View const& engineView() const = 0;
    virtual ReplicaId engineSelf() const = 0;
    virtual std::uint64_t engineNowUs() = 0;

    // Signs with the current consensus key (throws KeyForgottenError after
    // forget()); the engine attaches `engineSelfKey` to outgoing votes while
    // the installed view record lacks this replica's key.
    virtual crypto::Signature engineSign(crypto::Digest const& digest) = 0;
    virtual std::optional<crypto::EndorsedKey> engineSelfKey() = 0;
    virtual bool engineSelfKeyInRecord() = 0;

    virtual KeyDirectory& engineKeys() = 0;

    // Dedup guard for the pending pool.
    virtual bool engineIsFresh(ClientId client, std::uint64_t sequence) = 0;

    // Asynchronous batch admission; answer arrives via onBatchValidated with
    // the same coordinates. Must be evaluated against the executed prefix in
    // force when it was requested.
    virtual void engineValidateBatch(InstanceId instance, std::uint32_t round,
                                     crypto::Digest const& hash,
                                     Batch const& batch) = 0;

    // Leader-side reconfiguration assembly: plan for the given pending
    // request transactions, or nullopt when they trigger no change yet.
    virtual std::optional<reconfig::ReconfigPlan>
    enginePlanReconfig(std::vector<Transaction> const& txs) = 0;

    virtual void engineBroadcast(MsgType type, Bytes body) = 0;
    virtual void engineSendTo(ReplicaId to, MsgType type, Bytes body) = 0;

    virtual void engineArmTimer(EngineTimer which, std::uint64_t delayUs) = 0;
    virtual void engineCancelTimer(EngineTimer which) = 0;

    virtual void engineDeliver(InstanceId instance, Batch const& batch,
                               ConsensusProof const& proof) = 0;
};

// Three-phase quorum ordering with leader rotation. The leader proposes a
// batch; members write-vote the hash (a round-scoped lock once a quorum
// forms), then accept-vote; the round leader relays the deciding accept
// quorum as the instance's canonical proof. Progress timeouts trigger
// signed round-change reports; the next round's leader justifies its
// proposal with a quorum of them and must re-propose the highest lock.
class ConsensusEngine
{
  public:
    ConsensusEngine(EngineConfig config, EngineHost& host);

    void openInstance(InstanceId instance);
    InstanceId currentInstance() const { return mCurrent; }
    bool instanceDecided() const { return mState.decided; }

    // Pool entry points (transactions already signature-checked upstream).
    void submitTransaction(Transaction tx);
    std::size_t poolSize() const;
    void pruneExecuted();

    // Network + async completions.
    void onMessage(WireMessage const& msg);
    void onBatchValidated(InstanceId instance, std::uint32_t round,
                          crypto::Digest const& hash, bool ok);
    void onTimer(EngineTimer which);

    ReplicaId leaderOf(InstanceId instance, std::uint32_t round) const;

  private:
    struct SyncEntry
    {
        SyncReport report;
        std::optional<Batch> lockedBatch;
    };

    struct InstanceState
    {
        std::uint32_t round = 0;
        bool decided = false;
        bool proposed = false;         // leader: sent PROPOSE this round
        bool written = false;          // sent WRITE this round
        bool accepted = false;         // sent ACCEPT for lock hash
        bool progressArmed = false;
        std::optional<crypto::Digest> proposalHash; // proposal seen this round
        std::map<crypto::Digest, Batch> batches;    // bodies by hash
        std::set<crypto::Digest> validated;   // admission passed locally
        std::set<crypto::Digest> invalid;     // admission failed locally
        std::set<crypto::Digest> certified;   // write-quorum certified content
        std::optional<std::pair<std::uint32_t, crypto::Digest>> validating;
        std::map<std::pair<std::uint32_t, crypto::Digest>,
                 std::map<ReplicaId, SignedVote>>
            writes;
        std::optional<LockProof> lock;
        std::map<crypto::Digest, std::map<ReplicaId, SignedVote>> accepts;
        std::map<std::uint32_t, std::map<ReplicaId, SyncEntry>> syncs;
        std::optional<ConsensusProof> pendingProof; // decided, batch missing
    };

    struct CachedDecision
    {
        ConsensusProof proof;
        Batch batch;
    };

    void onPropose(WireMessage const& msg);
    void onWrite(WireMessage const& msg);
    void onAccept(WireMessage const& msg);
    void onSync(WireMessage const& msg);
    void onDecide(WireMessage const& msg);

    void maybeAssembleBatch();
    void proposeBatch(Batch batch, std::optional<SyncCertificate> cert);
    void startValidation(crypto::Digest const& hash, Batch const& batch);
    void sendWrite(crypto::Digest const& hash);
    void recordWrite(ReplicaId voter, std::uint32_t round,
                     crypto::Digest const& hash, SignedVote vote);
    void recordAccept(ReplicaId voter, crypto::Digest const& hash,
                      SignedVote vote);
    void maybeLock(std::uint32_t round, crypto::Digest const& hash);
    void maybeSendAccept();
    void maybeLeadDecision(crypto::Digest const& hash);
    void completeDecision(Batch const& batch, ConsensusProof const& proof);
    void adoptRound(std::uint32_t round);
    void broadcastSync();
    void maybeLeadRound(std::uint32_t round);
    void armProgressTimer();
    bool verifySyncReport(SyncReport const& report);
    bool verifyLockProof(InstanceId instance, LockProof const& lock);
    // Highest verified lock constraint in a certificate, if any.
    std::optional<crypto::Digest>
    requiredHashFrom(SyncCertificate const& cert);
    SignedVote makeVote(crypto::Digest const& statement);
    SyncMsg makeSyncMsg();
    void answerStraggler(ReplicaId peer, InstanceId instance);
    Batch assembleAppBatch();
    std::optional<Batch> assembleReconfigBatch();

    EngineConfig mConfig;
    EngineHost& mHost;
    InstanceId mCurrent = 0;
    bool mOpened = false;
    InstanceState mState;
    bool mBatchTimerArmed = false;
    std::deque<Transaction> mAppPool;
    std::deque<Transaction> mReconfigPool;
    std::map<InstanceId, std::vector<WireMessage>> mBuffered;
    std::map<InstanceId, CachedDecision> mDecisions;
};

} // namespace bftchain
