// Copyright 2026 the bftchain authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include "bftchain/replica.hpp"

#include <algorithm>
#include <limits>

namespace bftchain
{

char const*
nameOf(ReplicaMode m)
{
    switch (m)
    {
    case ReplicaMode::OFFLINE:
        return "OFFLINE";
    case ReplicaMode::BOOTING:
        return "BOOTING";
    case ReplicaMode::ACTIVE:
        return "ACTIVE";
    case ReplicaMode::RECOVERING:
        return "RECOVERING";
    case ReplicaMode::JOINING:
        return "JOINING";
    case ReplicaMode::RETIRED:
        return "RETIRED";
    case ReplicaMode::HALTED:
        return "HALTED";
    }
    return "?";
}

namespace
{

AppConfig
decodeAppConfig(GenesisBlock const& genesis)
{
    crypto::initCrypto();
    try
    {
        return decodeFromBytes<AppConfig>(genesis.appConfig);
    }
    catch (CodecError const&)
    {
        return AppConfig{};
    }
}

} // namespace

ReplicaNode::ReplicaNode(ReplicaConfig config, ReplicaEnv& env)
    : mConfig(std::move(config))
    , mEnv(env)
    , mAppConfig(decodeAppConfig(mConfig.genesis))
    , mApp(mConfig.appFactory())
    , mCore(mConfig.genesis, *mApp, *this)
    , mEngine(mConfig.engine, *this)
{
}

void
ReplicaNode::start(StartMode mode, std::optional<JoinHint> hint)
{
    if (mMode != ReplicaMode::OFFLINE)
    {
        mEnv.logLine("start ignored: node already started");
        return;
    }
    switch (mode)
    {
    case StartMode::FRESH:
    {
        if (!mConfig.initialConsensusKey)
        {
            coreFatal("fresh start without the genesis consensus keypair");
            return;
        }
        auto key = std::move(*mConfig.initialConsensusKey);
        mConfig.initialConsensusKey.reset();
        auto endorsed = key.endorsed();
        mEnv.vaultStore(endorsed, key.secret().clone());
        mKeyCache.emplace(endorsed.viewId, std::move(key));
        startFresh();
        return;
    }
    case StartMode::RECOVER:
    {
        auto vault = mEnv.vaultLoad();
        for (auto& [publicPart, secret] : vault)
        {
            mKeyCache.emplace(publicPart.viewId,
                              crypto::ConsensusKeypair::fromParts(
                                  publicPart, std::move(secret)));
        }
        startRecovery(false);
        return;
    }
    case StartMode::JOIN:
    {
        if (!hint)
        {
            coreFatal("joining requires the current view's parameters");
            return;
        }
        mMode = ReplicaMode::JOINING;
        MembershipTask task;
        task.kind = MembershipTask::Kind::JOIN;
        task.stage = MembershipTask::Stage::GRANTS;
        task.hint = *hint;
        mTask = std::move(task);
        membershipBroadcastGrantReq();
        mEnv.armTimer(ReplicaTimer::MEMBERSHIP,
                      mConfig.membershipRetryTimeoutUs);
        return;
    }
    }
}

void
ReplicaNode::startFresh()
{
    mMode = ReplicaMode::BOOTING;
    rotateTo(mConfig.genesis.initialView);
    if (mMode != ReplicaMode::BOOTING)
    {
        return; // no key for the genesis view, or we are not in it
    }
    mCore.initFresh();
}

// --- EngineHost -------------------------------------------------------------

View const&
ReplicaNode::engineView() const
{
    return mCore.currentView();
}

ReplicaId
ReplicaNode::engineSelf() const
{
    return mConfig.self;
}

std::uint64_t
ReplicaNode::engineNowUs()
{
    return mEnv.nowUs();
}

crypto::Signature
ReplicaNode::engineSign(crypto::Digest const& digest)
{
    return signWithCurrentKey(digest);
}

std::optional<crypto::EndorsedKey>
ReplicaNode::engineSelfKey()
{
    if (!mActiveKeyView)
    {
        return std::nullopt;
    }
    auto* key = keyFor(*mActiveKeyView);
    if (!key)
    {
        return std::nullopt;
    }
    return key->endorsed();
}

bool
ReplicaNode::engineSelfKeyInRecord()
{
    return mSelfKeyInRecord;
}

KeyDirectory&
ReplicaNode::engineKeys()
{
    return mKeys;
}

bool
ReplicaNode::engineIsFresh(ClientId client, std::uint64_t sequence)
{
    return mCore.isFresh(client, sequence);
}

void
ReplicaNode::engineValidateBatch(InstanceId instance, std::uint32_t round,
                                 crypto::Digest const& hash,
                                 Batch const& batch)
{
    // Validation reads the executed prefix, so it runs on the replica loop
    // after the current event, never as a synchronous re-entry.
    mEnv.defer([this, instance, round, hash, batch]() {
        if (mMode != ReplicaMode::ACTIVE)
        {
            return;
        }
        bool ok = mCore.validateBatch(batch);
        mEngine.onBatchValidated(instance, round, hash, ok);
    });
}

std::optional<reconfig::ReconfigPlan>
ReplicaNode::enginePlanReconfig(std::vector<Transaction> const& txs)
{
    return mCore.planReconfig(txs);
}

void
ReplicaNode::engineBroadcast(MsgType type, Bytes body)
{
    broadcastToView(type, body);
}

void
ReplicaNode::engineSendTo(ReplicaId to, MsgType type, Bytes body)
{
    post(to, type, std::move(body));
}

void
ReplicaNode::engineArmTimer(EngineTimer which, std::uint64_t delayUs)
{
    mEnv.armTimer(static_cast<std::uint32_t>(which), delayUs);
}

void
ReplicaNode::engineCancelTimer(EngineTimer which)
{
    mEnv.cancelTimer(static_cast<std::uint32_t>(which));
}

void
ReplicaNode::engineDeliver(InstanceId instance, Batch const& batch,
                           ConsensusProof const& proof)
{
    mCore.onDelivered(instance, batch, proof);
}

// --- CoreHost ---------------------------------------------------------------

ReplicaId
ReplicaNode::coreSelf() const
{
    return mConfig.self;
}

crypto::Signature
ReplicaNode::coreSign(crypto::Digest const& digest)
{
    return signWithCurrentKey(digest);
}

std::optional<crypto::EndorsedKey>
ReplicaNode::coreSelfKey()
{
    return engineSelfKey();
}

bool
ReplicaNode::coreSelfKeyInRecord()
{
    return mSelfKeyInRecord;
}

KeyDirectory&
ReplicaNode::coreKeys()
{
    return mKeys;
}

void
ReplicaNode::coreEnqueueRecord(Record const& rec)
{
    mEnv.storageEnqueue(rec);
}

void
ReplicaNode::coreRequestSync()
{
    mEnv.storageRequestSync();
}

void
ReplicaNode::coreWriteSnapshot(std::uint64_t seq, Snapshot const& snap)
{
    mEnv.snapshotWrite(seq, snap);
}

std::optional<Snapshot>
ReplicaNode::coreLoadSnapshot(std::uint64_t seq)
{
    auto slot = mEnv.snapshotSlot(static_cast<unsigned>(seq % 2));
    if (!slot || slot->first != seq)
    {
        return std::nullopt;
    }
    return std::move(slot->second);
}

Bytes
ReplicaNode::coreSyncedLedger()
{
    return mEnv.storageSyncedBytes();
}

void
ReplicaNode::coreBroadcast(MsgType type, Bytes body)
{
    broadcastToView(type, body);
}

void
ReplicaNode::coreSendTo(ProcessId to, MsgType type, Bytes body)
{
    post(to, type, std::move(body));
}

void
ReplicaNode::coreReply(ClientId client, ReplyMsg const& reply)
{
    if (client == mConfig.self)
    {
        handleReply(mConfig.self, reply);
        return;
    }
    post(client, MsgType::REPLY, encodeToBytes(reply));
}

void
ReplicaNode::coreViewInstalled(View const& newView)
{
    rotateTo(newView);
}

void
ReplicaNode::coreBlockFinished(BlockNum closed)
{
    if (onBlockFinished)
    {
        onBlockFinished(closed);
    }
    if (mMode == ReplicaMode::BOOTING)
    {
        mMode = ReplicaMode::ACTIVE;
        mEnv.armTimer(ReplicaTimer::PERSIST_RESEND,
                      mConfig.engine.progressTimeoutUs);
    }
    if (mMode != ReplicaMode::ACTIVE)
    {
        return;
    }
    activateEngineAt(closed);
}

void
ReplicaNode::coreCertMismatch(BlockNum block,
                              crypto::Digest const& certifiedHash)
{
    mEnv.logLine("block " + std::to_string(block) +
                 " was certified with a header that differs from ours: " +
                 certifiedHash.hex().substr(0, 16) +
                 "...; discarding local state");
    startRecovery(true);
}

void
ReplicaNode::coreFatal(std::string const& reason)
{
    mMode = ReplicaMode::HALTED;
    mEnv.halt(reason);
}

// --- key custody ------------------------------------------------------------

crypto::ConsensusKeypair*
ReplicaNode::keyFor(ViewId viewId)
{
    auto it = mKeyCache.find(viewId);
    if (it == mKeyCache.end() || it->second.forgotten())
    {
        return nullptr;
    }
    return &it->second;
}

crypto::EndorsedKey
ReplicaNode::ensureKeyFor(ViewId viewId)
{
    if (auto* existing = keyFor(viewId))
    {
        return existing->endorsed();
    }
    auto key = crypto::ConsensusKeypair::fromSeed(mConfig.permanentKey, viewId,
                                                  mEnv.drawSeed());
    auto endorsed = key.endorsed();
    // The secret must be durable before anything is ever signed with it:
    // forgetting which keys we handed out is how retained-key forks start.
    mEnv.vaultStore(endorsed, key.secret().clone());
    mKeyCache.insert_or_assign(viewId, std::move(key));
    return endorsed;
}

crypto::Signature
ReplicaNode::signWithCurrentKey(crypto::Digest const& digest)
{
    if (!mActiveKeyView)
    {
        throw crypto::KeyForgottenError();
    }
    auto* key = keyFor(*mActiveKeyView);
    if (!key)
    {
        throw crypto::KeyForgottenError();
    }
    return key->sign(digest);
}

void
ReplicaNode::rotateTo(View const& view)
{
    if (!view.contains(mConfig.self))
    {
        // Out of the membership: every consensus secret we ever held is
        // destroyed so that not even our future selves can equivocate for
        // views we are no longer part of.
        for (auto& [viewId, key] : mKeyCache)
        {
            key.forget();
        }
        mKeyCache.clear();
        mEnv.vaultEraseBelow(std::numeric_limits<ViewId>::max());
        mActiveKeyView.reset();
        mSelfKeyInRecord = false;
        mEnv.cancelTimer(ReplicaTimer::ENGINE_BATCH);
        mEnv.cancelTimer(ReplicaTimer::ENGINE_PROGRESS);
        mEnv.cancelTimer(ReplicaTimer::PERSIST_RESEND);
        if (mMode != ReplicaMode::HALTED)
        {
            mMode = ReplicaMode::RETIRED;
        }
        mEnv.logLine("retired at view " + std::to_string(view.id));
        if (mTask && mTask->kind == MembershipTask::Kind::LEAVE)
        {
            if (onMembership)
            {
                onMembership(true,
                             "left at view " + std::to_string(view.id));
            }
            mTask.reset();
            mEnv.cancelTimer(ReplicaTimer::MEMBERSHIP);
        }
        return;
    }

    auto const* m = view.member(mConfig.self);
    if (m->consensusKey)
    {
        auto* key = keyFor(view.id);
        if (!key)
        {
            coreFatal("view " + std::to_string(view.id) +
                      " records our consensus key but its secret is not in "
                      "the vault");
            return;
        }
        if (key->endorsed().publicKey != m->consensusKey->publicKey)
        {
            coreFatal("view " + std::to_string(view.id) +
                      " records a consensus key that is not the one we "
                      "generated for it");
            return;
        }
        mSelfKeyInRecord = true;
    }
    else
    {
        // We are a member but our key never made it into the record (we did
        // not contribute a grant to this change). Mint one and spread it
        // with every message until our votes count again.
        ensureKeyFor(view.id);
        mSelfKeyInRecord = false;
    }
    mActiveKeyView = view.id;
    for (auto it = mKeyCache.begin(); it != mKeyCache.end();)
    {
        if (it->first < view.id)
        {
            it->second.forget();
            it = mKeyCache.erase(it);
        }
        else
        {
            ++it;
        }
    }
    mEnv.vaultEraseBelow(view.id);
}

// --- messaging --------------------------------------------------------------

WireMessage
ReplicaNode::stamp(MsgType type, Bytes body)
{
    WireMessage msg;
    msg.type = type;
    msg.sender = mConfig.self;
    msg.view = mCore.currentView().id;
    if (!mSelfKeyInRecord && mActiveKeyView)
    {
        if (auto* key = keyFor(*mActiveKeyView))
        {
            msg.lateKey = key->endorsed();
        }
    }
    msg.body = std::move(body);
    return msg;
}

void
ReplicaNode::post(ProcessId to, MsgType type, Bytes body)
{
    mEnv.sendMessage(to, stamp(type, std::move(body)));
}

void
ReplicaNode::broadcastToView(MsgType type, Bytes const& body)
{
    for (auto const& member : mCore.currentView().members)
    {
        if (member.id != mConfig.self)
        {
            mEnv.sendMessage(member.id, stamp(type, body));
        }
    }
}

// --- inbound dispatch -------------------------------------------------------

void
ReplicaNode::onMessage(WireMessage const& msg)
{
    if (mMode == ReplicaMode::OFFLINE || mMode == ReplicaMode::HALTED)
    {
        return;
    }
    if (msg.lateKey)
    {
        mKeys.tryAdmit(*msg.lateKey);
    }
    try
    {
        switch (msg.type)
        {
        case MsgType::PROPOSE:
        case MsgType::WRITE:
        case MsgType::ACCEPT:
        case MsgType::SYNC:
        case MsgType::DECIDE:
            if (mMode == ReplicaMode::ACTIVE)
            {
                mEngine.onMessage(msg);
            }
            return;
        case MsgType::PERSIST:
            if (mMode == ReplicaMode::ACTIVE || mMode == ReplicaMode::RETIRED)
            {
                mCore.onPersist(msg.sender, parseBody<PersistMsg>(msg));
            }
            return;
        case MsgType::ST_REQ:
            mCore.onStateRequest(msg.sender, parseBody<StReqMsg>(msg));
            return;
        case MsgType::ST_REP:
            if (mMode == ReplicaMode::RECOVERING ||
                mMode == ReplicaMode::JOINING)
            {
                stOnReply(msg.sender, parseBody<StRepMsg>(msg));
            }
            return;
        case MsgType::GRANT_REQ:
            if (mMode == ReplicaMode::ACTIVE)
            {
                handleGrantReq(msg.sender, parseBody<GrantReqMsg>(msg));
            }
            return;
        case MsgType::GRANT_REP:
            handleGrantRep(parseBody<GrantRepMsg>(msg));
            return;
        case MsgType::SUBMIT:
            if (mMode == ReplicaMode::ACTIVE)
            {
                handleSubmit(msg);
            }
            return;
        case MsgType::REPLY:
            handleReply(msg.sender, parseBody<ReplyMsg>(msg));
            return;
        }
    }
    catch (CodecError const&)
    {
        // malformed body; drop
    }
}

void
ReplicaNode::handleSubmit(WireMessage const& msg)
{
    auto m = parseBody<SubmitMsg>(msg);
    auto const& tx = m.tx;
    auto record = mCore.clientRecord(tx.client);
    if (record && tx.sequence <= record->lastSequence)
    {
        if (tx.sequence == record->lastSequence)
        {
            // Retransmission of the client's last transaction: answer from
            // the executed record instead of ordering it again.
            ReplyMsg reply;
            reply.client = tx.client;
            reply.sequence = tx.sequence;
            reply.block = record->block;
            reply.position = record->position;
            auto const& view = mCore.currentView();
            reply.viewId = view.id;
            reply.viewN = view.n();
            reply.viewF = view.f;
            reply.result = record->resultPayload;
            coreReply(tx.client, reply);
        }
        return;
    }
    if (tx.kind == TxKind::APPLICATION && !mApp->validate(tx))
    {
        return;
    }
    mEngine.submitTransaction(tx);
}

void
ReplicaNode::handleReply(ProcessId sender, ReplyMsg const& reply)
{
    if (!mTask || mTask->stage != MembershipTask::Stage::SUBMITTED || mFetch)
    {
        return;
    }
    if (reply.client != mConfig.self || reply.sequence != mTask->sequence)
    {
        return;
    }
    auto& votes = mTask->replyVotes[encodeToBytes(reply)];
    votes.insert(sender);
    // Trusting a reply needs one more voice than the fault bound of the view
    // we are dealing with; for a join that view is the successor one.
    std::uint32_t bound = mTask->hint.f;
    if (mTask->kind == MembershipTask::Kind::JOIN)
    {
        bound = View::maxFaulty(mTask->hint.n + 1);
    }
    if (votes.size() >= static_cast<std::size_t>(bound) + 1)
    {
        membershipOnAgreedReply(reply);
    }
}

void
ReplicaNode::handleGrantReq(ProcessId sender, GrantReqMsg const& req)
{
    auto const& view = mCore.currentView();
    if (req.subject != sender || req.viewId != view.id)
    {
        return;
    }
    if (!crypto::verify(req.subjectPermanentKey, req.signingDigest(),
                        req.signature))
    {
        return;
    }
    if (req.purpose == reconfig::GrantPurpose::JOIN)
    {
        if (view.contains(req.subject))
        {
            return;
        }
        if (mAppConfig.joinPolicy == JoinPolicyKind::ALLOW_LIST)
        {
            auto const& list = mAppConfig.joinAllowList;
            if (std::find(list.begin(), list.end(), req.subject) ==
                list.end())
            {
                return;
            }
        }
    }
    else
    {
        auto const* m = view.member(req.subject);
        if (!m || m->permanentKey != req.subjectPermanentKey)
        {
            return;
        }
    }
    reconfig::MembershipGrant grant;
    grant.purpose = req.purpose;
    grant.granter = mConfig.self;
    grant.subject = req.subject;
    grant.subjectPermanentKey = req.subjectPermanentKey;
    grant.viewId = view.id;
    grant.granterNextKey = ensureKeyFor(view.id + 1);
    grant.signature = mConfig.permanentKey.sign(grant.signingDigest());
    GrantRepMsg rep;
    rep.grant = std::move(grant);
    post(sender, MsgType::GRANT_REP, encodeToBytes(rep));
}

void
ReplicaNode::handleGrantRep(GrantRepMsg const& rep)
{
    if (!mTask || mTask->stage != MembershipTask::Stage::GRANTS)
    {
        return;
    }
    auto const& g = rep.grant;
    auto wanted = mTask->kind == MembershipTask::Kind::JOIN
                      ? reconfig::GrantPurpose::JOIN
                      : reconfig::GrantPurpose::LEAVE;
    if (g.purpose != wanted || g.subject != mConfig.self ||
        g.granter == mConfig.self || g.viewId != mTask->hint.viewId ||
        g.subjectPermanentKey != mConfig.permanentKey.publicKey)
    {
        return;
    }
    if (mTask->kind == MembershipTask::Kind::LEAVE)
    {
        // As a member we can vet granter signatures ourselves; a joining
        // candidate cannot and leaves that to the validators.
        auto const* m = mCore.currentView().member(g.granter);
        if (!m ||
            !crypto::verify(m->permanentKey, g.signingDigest(), g.signature))
        {
            return;
        }
    }
    mTask->grants.insert_or_assign(g.granter, g);
    std::uint32_t need =
        mTask->hint.n > mTask->hint.f ? mTask->hint.n - mTask->hint.f : 1;
    if (mTask->grants.size() >= need)
    {
        membershipAssembleAndSubmit();
    }
}

void
ReplicaNode::submitOwn(Transaction tx)
{
    SubmitMsg sub;
    sub.tx = tx;
    broadcastToView(MsgType::SUBMIT, encodeToBytes(sub));
    if (mMode == ReplicaMode::ACTIVE)
    {
        mEngine.submitTransaction(std::move(tx));
    }
}

std::uint64_t
ReplicaNode::nextSelfSequence()
{
    std::uint64_t last = mSelfSeqIssued;
    if (auto record = mCore.clientRecord(mConfig.self))
    {
        last = std::max(last, record->lastSequence);
    }
    mSelfSeqIssued = last + 1;
    return mSelfSeqIssued;
}

// --- membership -------------------------------------------------------------

void
ReplicaNode::requestLeave()
{
    if (mMode != ReplicaMode::ACTIVE || mTask)
    {
        return;
    }
    auto const& view = mCore.currentView();
    MembershipTask task;
    task.kind = MembershipTask::Kind::LEAVE;
    task.stage = MembershipTask::Stage::GRANTS;
    task.hint = JoinHint{view.id, view.n(), view.f};
    mTask = std::move(task);
    membershipBroadcastGrantReq();
    mEnv.armTimer(ReplicaTimer::MEMBERSHIP, mConfig.membershipRetryTimeoutUs);
}

void
ReplicaNode::voteRemove(ReplicaId target)
{
    if (mMode != ReplicaMode::ACTIVE || target == mConfig.self)
    {
        return;
    }
    auto const& view = mCore.currentView();
    auto const* m = view.member(target);
    if (!m)
    {
        return;
    }
    reconfig::ReconfigRequest req;
    req.kind = reconfig::ReconfigKind::REMOVE;
    req.subject = target;
    req.subjectPermanentKey = m->permanentKey;
    req.viewId = view.id;
    req.issuerNextKey = ensureKeyFor(view.id + 1);
    auto tx = reconfig::makeReconfigTransaction(
        mConfig.self, nextSelfSequence(), mConfig.permanentKey,
        std::move(req));
    submitOwn(std::move(tx));
}

void
ReplicaNode::membershipBroadcastGrantReq()
{
    if (!mTask)
    {
        return;
    }
    GrantReqMsg req;
    req.purpose = mTask->kind == MembershipTask::Kind::JOIN
                      ? reconfig::GrantPurpose::JOIN
                      : reconfig::GrantPurpose::LEAVE;
    req.subject = mConfig.self;
    req.subjectPermanentKey = mConfig.permanentKey.publicKey;
    req.viewId = mTask->hint.viewId;
    req.signature = mConfig.permanentKey.sign(req.signingDigest());
    auto body = encodeToBytes(req);
    if (mTask->kind == MembershipTask::Kind::JOIN)
    {
        for (auto to : mEnv.knownReplicas())
        {
            if (to != mConfig.self)
            {
                post(to, MsgType::GRANT_REQ, body);
            }
        }
    }
    else
    {
        broadcastToView(MsgType::GRANT_REQ, body);
    }
}

void
ReplicaNode::membershipAssembleAndSubmit()
{
    auto& task = *mTask;
    reconfig::ReconfigRequest req;
    req.kind = task.kind == MembershipTask::Kind::JOIN
                   ? reconfig::ReconfigKind::JOIN
                   : reconfig::ReconfigKind::LEAVE;
    req.subject = mConfig.self;
    req.subjectPermanentKey = mConfig.permanentKey.publicKey;
    req.viewId = task.hint.viewId;
    if (task.kind == MembershipTask::Kind::JOIN)
    {
        req.issuerNextKey = ensureKeyFor(task.hint.viewId + 1);
    }
    for (auto const& [granter, grant] : task.grants)
    {
        req.grants.push_back(grant);
    }
    task.sequence = nextSelfSequence();
    auto tx = reconfig::makeReconfigTransaction(
        mConfig.self, task.sequence, mConfig.permanentKey, std::move(req));
    task.tx = tx;
    task.stage = MembershipTask::Stage::SUBMITTED;
    task.replyVotes.clear();
    SubmitMsg sub;
    sub.tx = std::move(tx);
    auto body = encodeToBytes(sub);
    if (task.kind == MembershipTask::Kind::JOIN)
    {
        for (auto to : mEnv.knownReplicas())
        {
            if (to != mConfig.self)
            {
                post(to, MsgType::SUBMIT, body);
            }
        }
    }
    else
    {
        submitOwn(*task.tx);
    }
    mEnv.armTimer(ReplicaTimer::MEMBERSHIP, mConfig.membershipRetryTimeoutUs);
}

void
ReplicaNode::membershipOnAgreedReply(ReplyMsg const& reply)
{
    reconfig::ReconfigResult result;
    try
    {
        result = decodeFromBytes<reconfig::ReconfigResult>(reply.result);
    }
    catch (CodecError const&)
    {
        result.accepted = false;
    }
    if (mTask->kind == MembershipTask::Kind::JOIN)
    {
        mEnv.cancelTimer(ReplicaTimer::MEMBERSHIP);
        if (!result.accepted)
        {
            mTask.reset();
            mMode = ReplicaMode::OFFLINE;
            if (onMembership)
            {
                onMembership(false, "admission request rejected");
            }
            return;
        }
        // Admitted on the chain; now earn the chain itself. The task stays
        // open so the adoption can report the outcome.
        FetchTask fetch;
        fetch.anyResponder = true;
        fetch.minTarget = reply.block;
        fetch.waitReplies = std::max<std::uint32_t>(
            1, reply.viewN > reply.viewF ? reply.viewN - reply.viewF : 1);
        fetch.faultBound = reply.viewF;
        fetch.viewGuess = mConfig.genesis.initialView;
        fetch.ownClaim = -1;
        fetch.claims[mConfig.self] = -1;
        mFetch = std::move(fetch);
        stProbe();
        return;
    }
    // LEAVE: a rejection is final. Acceptance is not acted upon here -- the
    // reconfiguration block will execute locally and retire us.
    if (!result.accepted)
    {
        mEnv.cancelTimer(ReplicaTimer::MEMBERSHIP);
        mTask.reset();
        if (onMembership)
        {
            onMembership(false, "leave request rejected");
        }
    }
}

// --- timers and storage barriers ---------------------------------------------

void
ReplicaNode::onTimer(std::uint32_t token)
{
    switch (token)
    {
    case ReplicaTimer::ENGINE_BATCH:
        if (mMode == ReplicaMode::ACTIVE)
        {
            mEngine.onTimer(EngineTimer::BATCH);
        }
        return;
    case ReplicaTimer::ENGINE_PROGRESS:
        if (mMode == ReplicaMode::ACTIVE)
        {
            mEngine.onTimer(EngineTimer::PROGRESS);
        }
        return;
    case ReplicaTimer::STATE_TRANSFER:
        stRetry();
        return;
    case ReplicaTimer::PERSIST_RESEND:
        if (mMode == ReplicaMode::ACTIVE)
        {
            if (mCore.phase() == CorePhase::AWAIT_CERT)
            {
                mCore.resendPersist();
            }
            mEnv.armTimer(ReplicaTimer::PERSIST_RESEND,
                          mConfig.engine.progressTimeoutUs);
        }
        return;
    case ReplicaTimer::MEMBERSHIP:
        if (!mTask || (mMode != ReplicaMode::ACTIVE &&
                       mMode != ReplicaMode::JOINING))
        {
            return;
        }
        if (mTask->stage == MembershipTask::Stage::GRANTS)
        {
            membershipBroadcastGrantReq();
            mEnv.armTimer(ReplicaTimer::MEMBERSHIP,
                          mConfig.membershipRetryTimeoutUs);
        }
        else if (mTask->tx)
        {
            SubmitMsg sub;
            sub.tx = *mTask->tx;
            auto body = encodeToBytes(sub);
            if (mTask->kind == MembershipTask::Kind::JOIN)
            {
                for (auto to : mEnv.knownReplicas())
                {
                    if (to != mConfig.self)
                    {
                        post(to, MsgType::SUBMIT, body);
                    }
                }
            }
            else
            {
                submitOwn(*mTask->tx);
            }
            mEnv.armTimer(ReplicaTimer::MEMBERSHIP,
                          mConfig.membershipRetryTimeoutUs);
        }
        return;
    default:
        return;
    }
}

void
ReplicaNode::onStorageSynced()
{
    switch (mMode)
    {
    case ReplicaMode::BOOTING:
    case ReplicaMode::ACTIVE:
    case ReplicaMode::RETIRED:
        mCore.onSyncDone();
        return;
    case ReplicaMode::RECOVERING:
    case ReplicaMode::JOINING:
        if (mFetch && mFetch->stage == FetchTask::Stage::ADOPT_SYNC &&
            mPending)
        {
            finalizeAdoption();
        }
        return;
    default:
        return;
    }
}

// --- recovery and state transfer ---------------------------------------------

void
ReplicaNode::startRecovery(bool distrustLocal)
{
    mMode = ReplicaMode::RECOVERING;
    mEnv.cancelTimer(ReplicaTimer::ENGINE_BATCH);
    mEnv.cancelTimer(ReplicaTimer::ENGINE_PROGRESS);
    mEnv.cancelTimer(ReplicaTimer::PERSIST_RESEND);
    mEnv.cancelTimer(ReplicaTimer::MEMBERSHIP);
    mTask.reset();
    mPending.reset();
    mFetch.emplace();
    auto& t = *mFetch;
    t.fullReplay = distrustLocal;

    auto bytes = mEnv.storageSyncedBytes();
    auto scan = scanRecords(bytes);
    if (scan.tailError)
    {
        mEnv.logLine("dropping torn ledger tail: " + *scan.tailError);
        mEnv.storageTruncate(scan.cleanEnd);
    }
    for (auto const& rec : scan.records)
    {
        if (rec.type == RecordType::HEADER ||
            rec.type == RecordType::GENESIS)
        {
            t.ownClaim = std::max(t.ownClaim,
                                  static_cast<std::int64_t>(rec.block));
        }
        else if (rec.type == RecordType::CERT && !distrustLocal)
        {
            // A certificate we hold proves a quorum held this block when it
            // formed; recovery must not settle for anything shorter.
            t.localCertClaim = std::max(
                t.localCertClaim, static_cast<std::int64_t>(rec.block));
        }
    }
    // Records past the last completed block are rewritten on replay.
    mEnv.storageTruncate(ledgerOffsetForBlock(scan.records, t.ownClaim));
    if (distrustLocal)
    {
        t.ownClaim = -1;
    }

    View guess = mConfig.genesis.initialView;
    for (auto const& rec : scan.records)
    {
        if (rec.type != RecordType::RECONFIG_TXBATCH ||
            static_cast<std::int64_t>(rec.block) > t.ownClaim)
        {
            continue;
        }
        try
        {
            guess = decodeFromBytes<ReconfigPayload>(rec.payload).newView;
        }
        catch (CodecError const&)
        {
        }
    }
    t.waitReplies =
        std::max<std::uint32_t>(1, guess.n() > guess.f ? guess.n() - guess.f
                                                       : 1);
    t.faultBound = guess.f;
    t.viewGuess = std::move(guess);
    t.claims[mConfig.self] = t.ownClaim;
    t.stage = FetchTask::Stage::PROBE;
    stProbe();
}

void
ReplicaNode::stProbe()
{
    StReqMsg req;
    req.phase = StPhase::PROBE;
    auto body = encodeToBytes(req);
    for (auto to : mEnv.knownReplicas())
    {
        if (to != mConfig.self)
        {
            post(to, MsgType::ST_REQ, body);
        }
    }
    mEnv.armTimer(ReplicaTimer::STATE_TRANSFER, mConfig.stRetryTimeoutUs);
    stComputeTarget();
}

void
ReplicaNode::stComputeTarget()
{
    auto& t = *mFetch;
    if (t.stage != FetchTask::Stage::PROBE ||
        t.claims.size() < t.waitReplies)
    {
        return;
    }
    std::vector<std::int64_t> sorted;
    sorted.reserve(t.claims.size());
    for (auto const& [who, claim] : t.claims)
    {
        sorted.push_back(claim);
    }
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    // The highest block claimed by more than the fault bound: at least one
    // honest replica durably holds it and everything below it.
    auto idx = std::min<std::size_t>(t.faultBound, sorted.size() - 1);
    std::int64_t target = sorted[idx];
    if (!t.fullReplay)
    {
        target = std::max(target, t.localCertClaim);
    }
    if (target < static_cast<std::int64_t>(t.minTarget))
    {
        return; // responders still behind what we know exists; keep probing
    }
    if (target < 0)
    {
        // Nothing durable anywhere in the system: genesis members begin
        // again from the genesis record.
        if (mConfig.genesis.initialView.contains(mConfig.self))
        {
            mFetch.reset();
            mEnv.cancelTimer(ReplicaTimer::STATE_TRANSFER);
            startFresh();
        }
        return;
    }
    t.target = static_cast<BlockNum>(target);
    t.attempt = 0;
    t.failedSenders.clear();
    if (!t.fullReplay)
    {
        auto keep = std::min<std::int64_t>(target, t.ownClaim);
        auto bytes = mEnv.storageSyncedBytes();
        auto scan = scanRecords(bytes);
        mEnv.storageTruncate(ledgerOffsetForBlock(scan.records, keep));
        t.fromBlock = keep;
    }
    else
    {
        t.fromBlock = -1;
    }
    t.stage = FetchTask::Stage::FETCH;
    if (!t.fullReplay && target <= t.ownClaim)
    {
        // The local ledger already reaches the target; verify it as-is.
        StRepMsg local;
        local.kind = StRepKind::FULL;
        local.target = t.target;
        local.fromBlock = t.fromBlock;
        local.attempt = t.attempt;
        t.fullReply = std::move(local);
        t.fullSender = mConfig.self;
        stVerify();
        return;
    }
    stFetch();
}

void
ReplicaNode::stFetch()
{
    auto& t = *mFetch;
    t.fullReply.reset();
    t.fullSender = 0;
    t.digestReplies.clear();
    mPending.reset();
    StReqMsg req;
    req.phase = StPhase::FETCH;
    req.target = t.target;
    req.fromBlock = t.fromBlock;
    req.attempt = t.attempt;
    auto body = encodeToBytes(req);
    for (auto to : mEnv.knownReplicas())
    {
        if (to != mConfig.self)
        {
            post(to, MsgType::ST_REQ, body);
        }
    }
    mEnv.armTimer(ReplicaTimer::STATE_TRANSFER, mConfig.stRetryTimeoutUs);
}

void
ReplicaNode::stOnReply(ProcessId sender, StRepMsg const& rep)
{
    if (!mFetch)
    {
        return;
    }
    auto& t = *mFetch;
    if (rep.kind == StRepKind::PROBE)
    {
        t.claims.insert_or_assign(sender, rep.latest);
        stComputeTarget();
        return;
    }
    if (t.stage != FetchTask::Stage::FETCH || rep.target != t.target ||
        rep.attempt != t.attempt)
    {
        return;
    }
    switch (rep.kind)
    {
    case StRepKind::UNAVAILABLE:
        // Only the replica serving the records ever reports unavailability,
        // so whoever sent this was it for this attempt: rotate.
        t.attempt++;
        stFetch();
        return;
    case StRepKind::FULL:
    {
        if (t.fullReply || t.failedSenders.count(sender))
        {
            return;
        }
        auto roles = stResponders(t.viewGuess, mConfig.self, t.attempt);
        bool designated = roles.full && sender == *roles.full;
        if (!designated && !t.anyResponder && t.attempt < t.viewGuess.n())
        {
            return;
        }
        t.fullReply = rep;
        t.fullSender = sender;
        stVerify();
        return;
    }
    case StRepKind::DIGEST:
        t.digestReplies.insert_or_assign(sender, rep.snapshotDigest);
        stMaybeFinish();
        return;
    default:
        return;
    }
}

void
ReplicaNode::stRetry()
{
    if (!mFetch)
    {
        return;
    }
    switch (mFetch->stage)
    {
    case FetchTask::Stage::PROBE:
        stProbe(); // re-asks everyone; earlier claims are kept
        return;
    case FetchTask::Stage::FETCH:
        mFetch->attempt++;
        stFetch();
        return;
    case FetchTask::Stage::ADOPT_SYNC:
        mEnv.armTimer(ReplicaTimer::STATE_TRANSFER,
                      mConfig.stRetryTimeoutUs);
        return;
    }
}

void
ReplicaNode::stVerify()
{
    auto& t = *mFetch;
    Bytes stream;
    if (!t.fullReplay)
    {
        stream = mEnv.storageSyncedBytes();
    }
    auto const& fetched = t.fullReply->recordStream;
    stream.insert(stream.end(), fetched.begin(), fetched.end());

    // Snapshot candidates, deepest cover first; our own copies are preferred
    // over a fetched one of equal cover because they need no attestation.
    struct Candidate
    {
        Snapshot snap;
        bool fetched = false;
    };
    std::vector<Candidate> candidates;
    if (t.fullReply->snapshot &&
        t.fullReply->snapshot->lastBlockCovered <= t.target)
    {
        candidates.push_back({*t.fullReply->snapshot, true});
    }
    if (!t.fullReplay)
    {
        for (unsigned slot = 0; slot < 2; ++slot)
        {
            if (auto own = mEnv.snapshotSlot(slot))
            {
                if (own->second.lastBlockCovered <= t.target)
                {
                    candidates.push_back({std::move(own->second), false});
                }
            }
        }
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](Candidate const& a, Candidate const& b) {
                         if (a.snap.lastBlockCovered !=
                             b.snap.lastBlockCovered)
                         {
                             return a.snap.lastBlockCovered >
                                    b.snap.lastBlockCovered;
                         }
                         return !a.fetched && b.fetched;
                     });

    auto z = mConfig.genesis.checkpointPeriod;
    std::string firstIssue;
    // One verification pass per candidate, then one with no seed at all: a
    // poisoned seed shows up as re-execution mismatches past its cover, and
    // must not condemn the records themselves.
    for (std::size_t i = 0; i <= candidates.size(); ++i)
    {
        Candidate const* cand = i < candidates.size() ? &candidates[i]
                                                      : nullptr;
        auto app = mConfig.appFactory();
        ChainVerifier verifier(mConfig.genesis, *app);
        std::optional<Snapshot> newest;
        verifier.onCheckpoint = [&](Snapshot const& snap) {
            mEnv.snapshotWrite(snap.lastBlockCovered / z, snap);
            newest = snap;
        };
        std::optional<crypto::Digest> seedDigest;
        if (cand)
        {
            if (!verifier.seedSnapshot(cand->snap))
            {
                continue;
            }
            newest = cand->snap;
            if (cand->fetched)
            {
                seedDigest = crypto::sha256(encodeToBytes(cand->snap));
            }
        }
        auto report = verifier.verify(stream);
        if (!report.fullyValid || report.lastComplete != t.target)
        {
            if (firstIssue.empty())
            {
                firstIssue = report.issues.empty()
                                 ? std::string("stream ends short of the "
                                               "target")
                                 : report.issues.front().what;
            }
            continue;
        }
        PendingAdoption pending;
        pending.state.nextBlock = t.target + 1;
        pending.state.lastReconfig = verifier.lastReconfig();
        pending.state.lastCheckpoint = verifier.lastCheckpoint();
        pending.state.lastHash = verifier.lastHash();
        pending.state.view = verifier.currentView();
        pending.state.exec = verifier.execState();
        pending.state.snapshot = newest;
        pending.state.headerHashes = verifier.headerHashes();
        pending.state.certified = verifier.certifiedBlocks();
        pending.keys = verifier.keys();
        pending.appState = app->snapshotState();
        pending.appendStream = t.fullReply->recordStream;
        pending.seedDigest = seedDigest;
        if (cand)
        {
            mEnv.snapshotWrite(cand->snap.lastBlockCovered / z, cand->snap);
        }
        mPending.emplace(std::move(pending));
        stMaybeFinish();
        return;
    }

    mEnv.logLine("state transfer attempt " + std::to_string(t.attempt) +
                 " failed verification: " + firstIssue);
    if (t.fullSender != mConfig.self)
    {
        t.failedSenders.insert(t.fullSender);
    }
    if (!t.fullReplay)
    {
        // The failure may live in our own prefix; fetch everything next time.
        t.fullReplay = true;
        t.fromBlock = -1;
    }
    t.attempt++;
    stFetch();
}

bool
ReplicaNode::stSeedConfirmed()
{
    auto& t = *mFetch;
    auto& p = *mPending;
    if (!p.seedDigest)
    {
        return true; // no fetched seed involved; the records carry themselves
    }
    // The snapshot's content is vouched for only when more members of the
    // final view than the fault bound say the same bytes: the serving
    // replica plus matching digest replies.
    auto const& view = p.state.view;
    std::set<ProcessId> matchers;
    if (t.fullSender != mConfig.self && view.contains(t.fullSender))
    {
        matchers.insert(t.fullSender);
    }
    for (auto const& [sender, digest] : t.digestReplies)
    {
        if (digest && *digest == *p.seedDigest && view.contains(sender) &&
            sender != t.fullSender)
        {
            matchers.insert(sender);
        }
    }
    return matchers.size() >= static_cast<std::size_t>(view.f) + 1;
}

void
ReplicaNode::stMaybeFinish()
{
    if (!mFetch || !mPending)
    {
        return;
    }
    if (!stSeedConfirmed())
    {
        return; // more digest replies may still arrive; the timer rotates
    }
    if (mPending->appendStream.empty())
    {
        finalizeAdoption();
        return;
    }
    if (mFetch->fullReplay)
    {
        mEnv.storageTruncate(0);
    }
    auto scan = scanRecords(mPending->appendStream);
    for (auto const& rec : scan.records)
    {
        mEnv.storageEnqueue(rec);
    }
    mEnv.storageRequestSync();
    mFetch->stage = FetchTask::Stage::ADOPT_SYNC;
}

void
ReplicaNode::finalizeAdoption()
{
    auto pending = std::move(*mPending);
    mPending.reset();
    bool wasJoin = mTask && mTask->kind == MembershipTask::Kind::JOIN;
    mFetch.reset();
    mEnv.cancelTimer(ReplicaTimer::STATE_TRANSFER);

    mKeys = pending.keys;
    mApp->restoreState(pending.appState);
    auto tip = pending.state.nextBlock - 1;
    mCore.adopt(std::move(pending.state));
    rotateTo(mCore.currentView());
    if (mMode == ReplicaMode::HALTED)
    {
        return;
    }
    if (!mCore.currentView().contains(mConfig.self))
    {
        // rotateTo already retired us and wiped the keys.
        if (wasJoin)
        {
            if (onMembership)
            {
                onMembership(false, "membership revoked before adoption");
            }
            mTask.reset();
            mEnv.cancelTimer(ReplicaTimer::MEMBERSHIP);
        }
        return;
    }
    mMode = ReplicaMode::ACTIVE;
    mEnv.armTimer(ReplicaTimer::PERSIST_RESEND,
                  mConfig.engine.progressTimeoutUs);
    mEnv.logLine("adopted chain through block " + std::to_string(tip));
    if (wasJoin)
    {
        if (onMembership)
        {
            onMembership(true, "admitted; chain adopted through block " +
                                   std::to_string(tip));
        }
        mTask.reset();
        mEnv.cancelTimer(ReplicaTimer::MEMBERSHIP);
    }
    if (mConfig.genesis.persistence == PersistenceVariant::STRONG &&
        tip >= 1 && !mCore.certified(tip))
    {
        // Collect the missing tip certificate first; its completion re-opens
        // the ordering engine.
        mCore.recertifyTrailing();
        if (mCore.phase() != CorePhase::IDLE)
        {
            return;
        }
    }
    activateEngineAt(tip);
}

std::uint64_t
ReplicaNode::ledgerOffsetForBlock(std::vector<Record> const& records,
                                  std::int64_t uptoBlock) const
{
    std::uint64_t offset = 0;
    for (auto const& rec : records)
    {
        if (static_cast<std::int64_t>(rec.block) > uptoBlock)
        {
            break; // file order is monotone in block number
        }
        offset += frameRecord(rec).size();
    }
    return offset;
}

void
ReplicaNode::activateEngineAt(BlockNum tip)
{
    mEngine.pruneExecuted();
    mEngine.openInstance(tip + 1);
}

} // namespace bftchain
