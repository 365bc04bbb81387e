// Copyright 2026 the bftchain authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include "bftchain/app.hpp"
#include "bftchain/block.hpp"
#include "bftchain/execution.hpp"
#include "bftchain/messages.hpp"
#include "bftchain/records.hpp"
#include "bftchain/reconfig.hpp"
#include "bftchain/view.hpp"

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace bftchain
{

// The block pipeline sits in one of three phases; ordering decisions for
// the next instance are only consumed while IDLE, which is what bounds the
// pipeline to one in-flight block.
enum class CorePhase : std::uint8_t
{
    IDLE = 0,
    AWAIT_SYNC = 1, // header enqueued, waiting for the storage barrier
    AWAIT_CERT = 2, // strong variant: waiting for quorum PERSIST votes
};

char const* nameOf(CorePhase p);

// Deterministic state-transfer duty split: exactly one member serves the
// full records (and snapshot) while the next f members answer with the
// snapshot digest only; the requester never serves itself, and the attempt
// counter rotates duties so a retry reaches a different responder set.
struct StResponders
{
    std::optional<ReplicaId> full;
    std::vector<ReplicaId> digests;
};

StResponders stResponders(View const& view, ProcessId requester,
                          std::uint32_t attempt);

// Everything the block pipeline needs from the replica around it.
class CoreHost
{
  public:
    virtual ~CoreHost() = default;

    virtual ReplicaId coreSelf() const = 0;
    virtual crypto::Signature coreSign(crypto::Digest const& digest) = 0;
    virtual std::optional<crypto::EndorsedKey> coreSelfKey() = 0;
    virtual bool coreSelfKeyInRecord() = 0;
    virtual KeyDirectory& coreKeys() = 0;

    // Storage stage. Enqueues never block; coreRequestSync's completion
    // arrives back via ChainCore::onSyncDone once everything enqueued so
    // far is durable.
    virtual void coreEnqueueRecord(Record const& rec) = 0;
    virtual void coreRequestSync() = 0;
    virtual void coreWriteSnapshot(std::uint64_t seq,
                                   Snapshot const& snap) = 0;
    virtual std::optional<Snapshot> coreLoadSnapshot(std::uint64_t seq) = 0;
    // Durable ledger prefix (synced bytes only); serves state transfer.
    virtual Bytes coreSyncedLedger() = 0;

    virtual void coreBroadcast(MsgType type, Bytes body) = 0;
    virtual void coreSendTo(ProcessId to, MsgType type, Bytes body) = 0;
    virtual void coreReply(ClientId client, ReplyMsg const& reply) = 0;

    // Fired the moment a reconfiguration block's successor view becomes
    // current (before the block's PERSIST round): the replica must rotate
    // to its next-view consensus key here.
    virtual void coreViewInstalled(View const& newView) = 0;
    // The pipeline is IDLE again; the ordering engine may open the next
    // instance.
    virtual void coreBlockFinished(BlockNum closed) = 0;
    // A persist quorum certified a header different from ours: local state
    // diverged and must be refetched.
    virtual void coreCertMismatch(BlockNum block,
                                  crypto::Digest const& certifiedHash) = 0;
    virtual void coreFatal(std::string const& reason) = 0;
};

// The blockchain layer over the ordering engine: executes decided batches,
// appends the block records, runs the storage barrier and (strong variant)
// the PERSIST certificate round, replies to clients, takes checkpoints, and
// serves state transfer to recovering or joining replicas.
class ChainCore
{
  public:
    ChainCore(GenesisBlock genesis, Application& app, CoreHost& host);

    // Fresh bootstrap: writes + syncs the genesis record, then reports
    // block 0 finished.
    void initFresh();

    // Verified state adoption (recovery / join): the host's key directory
    // must already hold every view up to state.view.
    struct AdoptedState
    {
        BlockNum nextBlock = 1;
        std::int64_t lastReconfig = -1;
        std::int64_t lastCheckpoint = -1;
        crypto::Digest lastHash;
        View view;
        ExecutionState exec;
        std::optional<Snapshot> snapshot;
        std::map<BlockNum, crypto::Digest> headerHashes;
        std::set<BlockNum> certified;
    };
    void adopt(AdoptedState state);

    // Recovery after a crash between a header sync and its certificate
    // write: re-runs the PERSIST round for the trailing block, which can
    // only re-derive the same certificate content.
    void recertifyTrailing();

    // Re-broadcasts our own PERSIST vote while a certificate round is
    // pending; peers that were down when the round started get another
    // chance to contribute.
    void resendPersist();

    View const& currentView() const { return mView; }
    BlockNum nextBlock() const { return mBNum; }
    CorePhase phase() const { return mPhase; }
    GenesisBlock const& genesis() const { return mGenesis; }
    crypto::Digest const& lastBlockHash() const { return mLastHash; }
    std::int64_t lastReconfigBlock() const { return mLastReconfig; }
    std::int64_t lastCheckpointBlock() const { return mLastCheckpoint; }
    bool certified(BlockNum block) const { return mCertified.count(block); }

    bool isFresh(ClientId client, std::uint64_t sequence) const;
    // Reply cache: the latest executed transaction per client, for
    // answering retransmissions.
    std::optional<ClientRecord> clientRecord(ClientId client) const;
    crypto::Digest stateDigest();

    // Batch admission for the ordering engine (evaluated against the
    // executed prefix).
    bool validateBatch(Batch const& batch);
    std::optional<reconfig::ReconfigPlan>
    planReconfig(std::vector<Transaction> const& txs) const;

    // Pipeline entry points.
    void onDelivered(InstanceId instance, Batch const& batch,
                     ConsensusProof const& proof);
    void onSyncDone();
    void onPersist(ReplicaId sender, PersistMsg const& msg);
    void onStateRequest(ProcessId sender, StReqMsg const& req);

  private:
    struct ClosingBlock
    {
        BlockNum block = 0;
        crypto::Digest headerHash;
        Batch batch;
        std::vector<TxResult> results;
        bool reconfig = false;
        bool recertify = false; // trailing-block re-certification only
    };

    void closeBlock(crypto::Digest const& txHash,
                    crypto::Digest const& resultsHash);
    void startPersistRound();
    bool verifyPersistVote(ReplicaId sender, PersistMsg const& msg);
    void countPersistVote(ReplicaId sender, PersistMsg const& msg);
    void maybeCertify();
    void finishBlock();
    std::optional<SignedVote> makeVote(crypto::Digest const& statement);
    std::int64_t lastDurableBlock(std::vector<Record> const& records) const;
    std::optional<Snapshot> snapshotCovering(BlockNum cover);

    GenesisBlock mGenesis;
    Application& mApp;
    CoreHost& mHost;

    View mView;
    ExecutionState mExec;
    BlockNum mBNum = 1;
    std::int64_t mLastReconfig = -1;
    std::int64_t mLastCheckpoint = -1;
    crypto::Digest mLastHash;
    std::optional<Snapshot> mSnapshot;
    CorePhase mPhase = CorePhase::IDLE;
    bool mBooting = false;

    std::optional<ClosingBlock> mClosing;
    // Verified votes matching our header for the block being certified.
    std::map<ReplicaId, SignedVote> mCertVotes;
    // Verified votes for other header hashes (divergence detector).
    std::map<crypto::Digest, std::set<ReplicaId>> mMismatchVotes;
    // Raw votes for blocks we have not reached or synced yet.
    std::map<BlockNum, std::vector<std::pair<ReplicaId, PersistMsg>>>
        mStashedVotes;

    std::map<BlockNum, crypto::Digest> mHeaderHash;
    std::set<BlockNum> mCertified;
};

} // namespace bftchain
