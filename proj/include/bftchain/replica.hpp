// Copyright 2026 the bftchain authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include "bftchain/app.hpp"
#include "bftchain/app_config.hpp"
#include "bftchain/chain_core.hpp"
#include "bftchain/chain_verifier.hpp"
#include "bftchain/consensus.hpp"
#include "bftchain/messages.hpp"
#include "bftchain/records.hpp"

#include <array>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace bftchain
{

// Timer tokens a replica multiplexes onto its environment's one-shot timer
// table; the ordering engine's own tokens occupy 0 and 1.
struct ReplicaTimer
{
    static constexpr std::uint32_t ENGINE_BATCH = 0;
    static constexpr std::uint32_t ENGINE_PROGRESS = 1;
    static constexpr std::uint32_t STATE_TRANSFER = 2;
    static constexpr std::uint32_t PERSIST_RESEND = 3;
    static constexpr std::uint32_t MEMBERSHIP = 4;
};

enum class ReplicaMode : std::uint8_t
{
    OFFLINE = 0,    // constructed, not started
    BOOTING = 1,    // genesis record write in flight
    ACTIVE = 2,     // full protocol participation
    RECOVERING = 3, // state transfer after a crash or divergence
    JOINING = 4,    // candidate working through the admission flow
    RETIRED = 5,    // left or was removed; consensus keys wiped
    HALTED = 6,     // invariant breach; refuses all input
};

char const* nameOf(ReplicaMode m);

// Everything a replica needs from its surroundings: virtual time, one-shot
// timers, point-to-point delivery, the storage stage (ledger file plus the
// snapshot double-buffer), a durable vault for consensus-key secrets, and a
// seed source. Implemented by the deterministic simulator and by the
// socket/disk runtime; the replica's behavior is identical over both.
class ReplicaEnv
{
  public:
    virtual ~ReplicaEnv() = default;

    virtual std::uint64_t nowUs() = 0;
    // Key-generation entropy; the simulator derives it from the run seed so
    // executions replay bit-identically.
    virtual std::array<std::uint8_t, 32> drawSeed() = 0;

    virtual void sendMessage(ProcessId to, WireMessage msg) = 0;

    // One-shot timers; re-arming a token replaces its deadline.
    virtual void armTimer(std::uint32_t token, std::uint64_t delayUs) = 0;
    virtual void cancelTimer(std::uint32_t token) = 0;
    // Runs a task on the replica loop after the current event completes.
    virtual void defer(std::function<void()> task) = 0;

    // Ledger storage stage: enqueues are FIFO and never block; a sync
    // request completes (ReplicaNode::onStorageSynced) once everything
    // enqueued before it is durable.
    virtual void storageEnqueue(Record const& rec) = 0;
    virtual void storageRequestSync() = 0;
    virtual Bytes storageSyncedBytes() = 0;
    // Recovery only: discard every durable byte past `keep` and anything
    // still queued.
    virtual void storageTruncate(std::uint64_t keep) = 0;

    // Snapshot double-buffer, slot = seq % 2.
    virtual void snapshotWrite(std::uint64_t seq, Snapshot const& snap) = 0;
    virtual std::optional<std::pair<std::uint64_t, Snapshot>>
    snapshotSlot(unsigned slot) = 0;

    // Durable consensus-key custody. A key must be durable before its first
    // signature and erased durably when forgotten -- the fork-prevention
    // guarantee is only as strong as this store.
    virtual void vaultStore(crypto::EndorsedKey const& publicPart,
                            crypto::SecretKey secret) = 0;
    virtual void vaultEraseBelow(ViewId viewId) = 0;
    virtual std::vector<std::pair<crypto::EndorsedKey, crypto::SecretKey>>
    vaultLoad() = 0;

    // Transport peer table: replica processes reachable from here.
    virtual std::vector<ProcessId> knownReplicas() = 0;

    virtual void logLine(std::string line) = 0;
    // Unrecoverable local invariant breach.
    virtual void halt(std::string reason) = 0;
};

struct ReplicaConfig
{
    ReplicaId self = 0;
    GenesisBlock genesis;
    EngineConfig engine;
    crypto::PermanentKeypair permanentKey;
    // Fresh-start members: the pre-endorsed view-0 consensus keypair whose
    // public half the genesis view records.
    std::optional<crypto::ConsensusKeypair> initialConsensusKey;
    // Builds application instances: one live, plus one per verification run.
    std::function<std::unique_ptr<Application>()> appFactory;
    std::uint64_t stRetryTimeoutUs = 400'000;
    std::uint64_t membershipRetryTimeoutUs = 500'000;
};

enum class StartMode : std::uint8_t
{
    FRESH = 0,   // genesis member with an empty ledger
    RECOVER = 1, // resume from whatever the ledger holds
    JOIN = 2,    // outsider working through the admission flow
};

// What a joining candidate must know out of band about the view it is
// joining; everything else is earned through grants and state transfer.
struct JoinHint
{
    ViewId viewId = 0;
    std::uint32_t n = 0;
    std::uint32_t f = 0;
};

// One replica: the ordering engine and the block pipeline wired together
// over a ReplicaEnv, plus the choreography around them -- crash recovery
// and divergence repair via state transfer, candidate admission (join),
// voluntary leave, removal voting, and per-view consensus-key custody.
class ReplicaNode : private EngineHost, private CoreHost
{
  public:
    ReplicaNode(ReplicaConfig config, ReplicaEnv& env);

    void start(StartMode mode, std::optional<JoinHint> hint = std::nullopt);

    // Environment callbacks.
    void onMessage(WireMessage const& msg);
    void onTimer(std::uint32_t token);
    void onStorageSynced();

    // Membership actions (operator/test driven).
    void requestLeave();
    void voteRemove(ReplicaId target);

    // Outcome of an in-flight membership flow (join or leave).
    std::function<void(bool accepted, std::string detail)> onMembership;
    // A block left the pipeline (certified under the strong variant).
    std::function<void(BlockNum block)> onBlockFinished;

    ReplicaMode mode() const { return mMode; }
    ChainCore const& core() const { return mCore; }
    ConsensusEngine const& engine() const { return mEngine; }
    ReplicaId self() const { return mConfig.self; }
    crypto::Digest stateDigest() { return mCore.stateDigest(); }
    Application const& app() const { return *mApp; }

  private:
    // --- EngineHost ---
    View const& engineView() const override;
    ReplicaId engineSelf() const override;
    std::uint64_t engineNowUs() override;
    crypto::Signature engineSign(crypto::Digest const& digest) override;
    std::optional<crypto::EndorsedKey> engineSelfKey() override;
    bool engineSelfKeyInRecord() override;
    KeyDirectory& engineKeys() override;
    bool engineIsFresh(ClientId client, std::uint64_t sequence) override;
    void engineValidateBatch(InstanceId instance, std::uint32_t round,
                             crypto::Digest const& hash,
                             Batch const& batch) override;
    std::optional<reconfig::ReconfigPlan>
    enginePlanReconfig(std::vector<Transaction> const& txs) override;
    void engineBroadcast(MsgType type, Bytes body) override;
    void engineSendTo(ReplicaId to, MsgType type, Bytes body) override;
    void engineArmTimer(EngineTimer which, std::uint64_t delayUs) override;
    void engineCancelTimer(EngineTimer which) override;
    void engineDeliver(InstanceId instance, Batch const& batch,
                       ConsensusProof const& proof) override;

    // --- CoreHost ---
    ReplicaId coreSelf() const override;
    crypto::Signature coreSign(crypto::Digest const& digest) override;
    std::optional<crypto::EndorsedKey> coreSelfKey() override;
    bool coreSelfKeyInRecord() override;
    KeyDirectory& coreKeys() override;
    void coreEnqueueRecord(Record const& rec) override;
    void coreRequestSync() override;
    void coreWriteSnapshot(std::uint64_t seq, Snapshot const& snap) override;
    std::optional<Snapshot> coreLoadSnapshot(std::uint64_t seq) override;
    Bytes coreSyncedLedger() override;
    void coreBroadcast(MsgType type, Bytes body) override;
    void coreSendTo(ProcessId to, MsgType type, Bytes body) override;
    void coreReply(ClientId client, ReplyMsg const& reply) override;
    void coreViewInstalled(View const& newView) override;
    void coreBlockFinished(BlockNum closed) override;
    void coreCertMismatch(BlockNum block,
                          crypto::Digest const& certifiedHash) override;
    void coreFatal(std::string const& reason) override;

    // --- key custody ---
    crypto::ConsensusKeypair* keyFor(ViewId viewId);
    crypto::EndorsedKey ensureKeyFor(ViewId viewId);
    crypto::Signature signWithCurrentKey(crypto::Digest const& digest);
    // Aligns key custody with a newly current view: picks or mints our key,
    // durably forgets older ones, or wipes everything if we are out.
    void rotateTo(View const& view);

    // --- messaging helpers ---
    WireMessage stamp(MsgType type, Bytes body);
    void post(ProcessId to, MsgType type, Bytes body);
    void broadcastToView(MsgType type, Bytes const& body);

    void handleSubmit(WireMessage const& msg);
    void handleReply(ProcessId sender, ReplyMsg const& reply);
    void handleGrantReq(ProcessId sender, GrantReqMsg const& req);
    void handleGrantRep(GrantRepMsg const& rep);
    void submitOwn(Transaction tx);
    std::uint64_t nextSelfSequence();

    // --- state transfer / recovery ---
    struct FetchTask
    {
        enum class Stage : std::uint8_t
        {
            PROBE = 0,
            FETCH = 1,
            ADOPT_SYNC = 2, // verified records draining to disk
        };
        Stage stage = Stage::PROBE;
        bool fullReplay = false; // distrust the local prefix entirely
        bool anyResponder = false; // duty map unreliable (joiner)
        BlockNum minTarget = 0;  // joiner: its reconfiguration block
        std::uint32_t waitReplies = 1;
        std::uint32_t faultBound = 0;
        View viewGuess; // responder-duty mapping + thresholds only
        std::int64_t ownClaim = -1;
        std::int64_t localCertClaim = -1; // own certs prove quorum custody
        std::map<ProcessId, std::int64_t> claims;
        BlockNum target = 0;
        std::int64_t fromBlock = -1;
        std::uint32_t attempt = 0;
        std::set<ProcessId> failedSenders;
        std::optional<StRepMsg> fullReply;
        ProcessId fullSender = 0;
        std::map<ProcessId, std::optional<crypto::Digest>> digestReplies;
    };

    // Verified chain waiting for the storage barrier or for enough
    // snapshot-digest confirmations before it may be adopted.
    struct PendingAdoption
    {
        ChainCore::AdoptedState state;
        KeyDirectory keys;
        Bytes appState;
        Bytes appendStream; // fetched records to make durable before adopting
        std::optional<crypto::Digest> seedDigest; // digest of the used seed
    };

    void startRecovery(bool distrustLocal);
    void stProbe();
    void stComputeTarget();
    void stFetch();
    void stOnReply(ProcessId sender, StRepMsg const& rep);
    void stRetry();
    void stVerify();
    bool stSeedConfirmed();
    void stMaybeFinish();
    void finalizeAdoption();
    std::uint64_t ledgerOffsetForBlock(std::vector<Record> const& records,
                                       std::int64_t uptoBlock) const;

    // --- membership choreography ---
    struct MembershipTask
    {
        enum class Kind : std::uint8_t
        {
            JOIN = 0,
            LEAVE = 1,
        };
        enum class Stage : std::uint8_t
        {
            GRANTS = 0,
            SUBMITTED = 1,
        };
        Kind kind = Kind::JOIN;
        Stage stage = Stage::GRANTS;
        JoinHint hint;
        std::uint64_t sequence = 0;
        std::map<ReplicaId, reconfig::MembershipGrant> grants;
        std::optional<Transaction> tx;
        // reply identity bytes -> distinct repliers (f+1 must agree)
        std::map<Bytes, std::set<ProcessId>> replyVotes;
    };

    void membershipBroadcastGrantReq();
    void membershipAssembleAndSubmit();
    void membershipOnAgreedReply(ReplyMsg const& reply);
    void startFresh();
    void activateEngineAt(BlockNum tip);

    ReplicaConfig mConfig;
    ReplicaEnv& mEnv;
    AppConfig mAppConfig; // decoded from the genesis block (join policy)
    std::unique_ptr<Application> mApp;
    KeyDirectory mKeys;
    ChainCore mCore;
    ConsensusEngine mEngine;

    ReplicaMode mMode = ReplicaMode::OFFLINE;
    // In-process cache of the durable key vault.
    std::map<ViewId, crypto::ConsensusKeypair> mKeyCache;
    std::optional<ViewId> mActiveKeyView;
    bool mSelfKeyInRecord = false;

    std::optional<FetchTask> mFetch;
    std::optional<PendingAdoption> mPending;
    std::optional<MembershipTask> mTask;
    std::uint64_t mSelfSeqIssued = 0;
};

} // namespace bftchain
