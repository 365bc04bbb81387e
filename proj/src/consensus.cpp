// Copyright 2026 the bftchain authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include "bftchain/consensus.hpp"

#include <algorithm>

namespace bftchain
{

ConsensusEngine::ConsensusEngine(EngineConfig config, EngineHost& host)
    : mConfig(config), mHost(host)
{
}

ReplicaId
ConsensusEngine::leaderOf(InstanceId instance, std::uint32_t round) const
{
    auto const& view = mHost.engineView();
    auto idx = static_cast<std::uint32_t>((instance + round) % view.n());
    return view.members[idx].id;
}

void
ConsensusEngine::openInstance(InstanceId instance)
{
    mCurrent = instance;
    mOpened = true;
    mState = InstanceState{};
    if (mBatchTimerArmed)
    {
        mHost.engineCancelTimer(EngineTimer::BATCH);
        mBatchTimerArmed = false;
    }

    // Decisions older than the straggler window can go; peers further behind
    // use state transfer.
    while (!mDecisions.empty() &&
           mDecisions.begin()->first + mConfig.decisionCache < instance)
    {
        mDecisions.erase(mDecisions.begin());
    }

    auto buffered = mBuffered.find(instance);
    std::vector<WireMessage> replay;
    if (buffered != mBuffered.end())
    {
        replay = std::move(buffered->second);
    }
    mBuffered.erase(mBuffered.begin(), mBuffered.upper_bound(instance));

    if (poolSize() > 0)
    {
        armProgressTimer();
    }
    if (leaderOf(instance, 0) == mHost.engineSelf())
    {
        maybeAssembleBatch();
    }
    for (auto const& msg : replay)
    {
        onMessage(msg);
    }
}

std::size_t
ConsensusEngine::poolSize() const
{
    return mAppPool.size() + mReconfigPool.size();
}

void
ConsensusEngine::submitTransaction(Transaction tx)
{
    if (!mHost.engineIsFresh(tx.client, tx.sequence))
    {
        return;
    }
    auto& pool =
        tx.kind == TxKind::RECONFIGURATION ? mReconfigPool : mAppPool;
    for (auto const& queued : pool)
    {
        if (queued.client == tx.client && queued.sequence == tx.sequence)
        {
            return;
        }
    }
    pool.push_back(std::move(tx));
    if (!mOpened || mState.decided)
    {
        return;
    }
    if (!mState.progressArmed)
    {
        armProgressTimer();
    }
    if (mState.round == 0 && leaderOf(mCurrent, 0) == mHost.engineSelf())
    {
        maybeAssembleBatch();
    }
}

void
ConsensusEngine::pruneExecuted()
{
    auto stale = [this](Transaction const& tx) {
        return !mHost.engineIsFresh(tx.client, tx.sequence);
    };
    std::erase_if(mAppPool, stale);
    std::erase_if(mReconfigPool, stale);
}

Batch
ConsensusEngine::assembleAppBatch()
{
    Batch batch;
    batch.assemblyTimeUs = mHost.engineNowUs();
    batch.kind = BatchKind::APPLICATION;
    for (auto const& tx : mAppPool)
    {
        if (batch.transactions.size() >= mConfig.maxBatch)
        {
            break;
        }
        batch.transactions.push_back(tx);
    }
    return batch;
}

std::optional<Batch>
ConsensusEngine::assembleReconfigBatch()
{
    if (mReconfigPool.empty())
    {
        return std::nullopt;
    }
    std::vector<Transaction> fresh;
    for (auto const& tx : mReconfigPool)
    {
        if (mHost.engineIsFresh(tx.client, tx.sequence))
        {
            fresh.push_back(tx);
        }
    }
    if (fresh.empty())
    {
        return std::nullopt;
    }
    auto plan = mHost.enginePlanReconfig(fresh);
    if (!plan)
    {
        return std::nullopt;
    }
    Batch batch;
    batch.assemblyTimeUs = mHost.engineNowUs();
    batch.kind = BatchKind::RECONFIGURATION;
    for (std::size_t i = 0; i < fresh.size(); ++i)
    {
        // Requests the plan rejects (for example removal votes still short
        // of their threshold) stay pooled for a later batch.
        if (i < plan->txAccepted.size() && plan->txAccepted[i])
        {
            batch.transactions.push_back(fresh[i]);
        }
    }
    if (batch.transactions.empty())
    {
        return std::nullopt;
    }
    return batch;
}

void
ConsensusEngine::maybeAssembleBatch()
{
    if (!mOpened || mState.decided || mState.proposed || mState.round != 0 ||
        leaderOf(mCurrent, 0) != mHost.engineSelf())
    {
        return;
    }
    if (auto reconfig = assembleReconfigBatch())
    {
        proposeBatch(std::move(*reconfig), std::nullopt);
        return;
    }
    if (mAppPool.empty())
    {
        return;
    }
    if (mAppPool.size() >= mConfig.maxBatch)
    {
        proposeBatch(assembleAppBatch(), std::nullopt);
        return;
    }
    if (!mBatchTimerArmed)
    {
        mBatchTimerArmed = true;
        mHost.engineArmTimer(EngineTimer::BATCH, mConfig.batchTimeoutUs);
    }
}

void
ConsensusEngine::proposeBatch(Batch batch, std::optional<SyncCertificate> cert)
{
    auto hash = batch.digest();
    mState.proposed = true;
    mState.proposalHash = hash;
    mState.batches.emplace(hash, batch);
    if (mBatchTimerArmed)
    {
        mHost.engineCancelTimer(EngineTimer::BATCH);
        mBatchTimerArmed = false;
    }

    ProposeMsg msg;
    msg.instance = mCurrent;
    msg.round = mState.round;
    msg.batch = std::move(batch);
    msg.syncCert = std::move(cert);
    mHost.engineBroadcast(MsgType::PROPOSE, encodeToBytes(msg));

    armProgressTimer();
    if (mState.pendingProof && mState.pendingProof->batchHash == hash)
    {
        completeDecision(mState.batches[hash], *mState.pendingProof);
        return;
    }
    if (mState.validated.count(hash) || mState.certified.count(hash))
    {
        sendWrite(hash);
    }
    else
    {
        startValidation(hash, mState.batches[hash]);
    }
}

void
ConsensusEngine::startValidation(crypto::Digest const& hash,
                                 Batch const& batch)
{
    if (mState.validated.count(hash) || mState.invalid.count(hash))
    {
        return;
    }
    if (mState.validating && mState.validating->second == hash)
    {
        return;
    }
    mState.validating = {mState.round, hash};
    mHost.engineValidateBatch(mCurrent, mState.round, hash, batch);
}

void
ConsensusEngine::onBatchValidated(InstanceId instance, std::uint32_t round,
                                  crypto::Digest const& hash, bool ok)
{
    if (instance != mCurrent || mState.decided)
    {
        return;
    }
    if (mState.validating && mState.validating->second == hash)
    {
        mState.validating.reset();
    }
    if (!ok)
    {
        mState.invalid.insert(hash);
        return;
    }
    mState.validated.insert(hash);
    if (round == mState.round && mState.proposalHash == hash &&
        !mState.written)
    {
        sendWrite(hash);
    }
}

SignedVote
ConsensusEngine::makeVote(crypto::Digest const& statement)
{
    SignedVote vote;
    vote.voter = mHost.engineSelf();
    vote.signature = mHost.engineSign(statement);
    if (!mHost.engineSelfKeyInRecord())
    {
        vote.lateKey = mHost.engineSelfKey();
    }
    return vote;
}

void
ConsensusEngine::sendWrite(crypto::Digest const& hash)
{
    if (mState.written || mState.decided)
    {
        return;
    }
    SignedVote vote;
    try
    {
        vote = makeVote(writeVoteDigest(mHost.engineView().id, mCurrent,
                                        mState.round, hash));
    }
    catch (crypto::KeyForgottenError const&)
    {
        return;
    }
    mState.written = true;

    WriteMsg msg;
    msg.instance = mCurrent;
    msg.round = mState.round;
    msg.batchHash = hash;
    msg.vote = vote;
    mHost.engineBroadcast(MsgType::WRITE, encodeToBytes(msg));
    recordWrite(vote.voter, mState.round, hash, vote);
}

void
ConsensusEngine::recordWrite(ReplicaId voter, std::uint32_t round,
                             crypto::Digest const& hash, SignedVote vote)
{
    mState.writes[{round, hash}].emplace(voter, std::move(vote));
    maybeLock(round, hash);
}

void
ConsensusEngine::maybeLock(std::uint32_t round, crypto::Digest const& hash)
{
    auto const& votes = mState.writes[{round, hash}];
    if (votes.size() < mHost.engineView().quorum())
    {
        return;
    }
    mState.certified.insert(hash);
    if (!mState.lock || mState.lock->round <= round)
    {
        LockProof lock;
        lock.round = round;
        lock.batchHash = hash;
        for (auto const& [voter, vote] : votes)
        {
            lock.writeVotes.push_back(vote);
        }
        mState.lock = std::move(lock);
    }
    // A write quorum certifies the content, so a replica whose own admission
    // check is still in flight can join in.
    if (round == mState.round && mState.proposalHash == hash &&
        !mState.written)
    {
        sendWrite(hash);
    }
    maybeSendAccept();
}

void
ConsensusEngine::maybeSendAccept()
{
    if (mState.decided || mState.accepted || !mState.lock)
    {
        return;
    }
    auto const& hash = mState.lock->batchHash;
    auto own = mState.writes.find({mState.lock->round, hash});
    if (own == mState.writes.end() ||
        !own->second.count(mHost.engineSelf()))
    {
        return; // we did not write this lock; leave accepting to those who did
    }
    SignedVote vote;
    try
    {
        vote = makeVote(
            acceptVoteDigest(mHost.engineView().id, mCurrent, hash));
    }
    catch (crypto::KeyForgottenError const&)
    {
        return;
    }
    mState.accepted = true;

    AcceptMsg msg;
    msg.instance = mCurrent;
    msg.round = mState.round;
    msg.batchHash = hash;
    msg.vote = vote;
    mHost.engineBroadcast(MsgType::ACCEPT, encodeToBytes(msg));
    recordAccept(vote.voter, hash, vote);
}

void
ConsensusEngine::recordAccept(ReplicaId voter, crypto::Digest const& hash,
                              SignedVote vote)
{
    mState.accepts[hash].emplace(voter, std::move(vote));
    maybeLeadDecision(hash);
}

void
ConsensusEngine::maybeLeadDecision(crypto::Digest const& hash)
{
    if (mState.decided ||
        leaderOf(mCurrent, mState.round) != mHost.engineSelf())
    {
        return;
    }
    auto const& votes = mState.accepts[hash];
    auto quorum = mHost.engineView().quorum();
    if (votes.size() < quorum)
    {
        return;
    }
    auto batch = mState.batches.find(hash);
    if (batch == mState.batches.end())
    {
        return;
    }
    ConsensusProof proof;
    proof.instance = mCurrent;
    proof.batchHash = hash;
    for (auto const& [voter, vote] : votes)
    {
        if (proof.votes.size() >= quorum)
        {
            break;
        }
        proof.votes.push_back(vote);
    }

    DecideMsg msg;
    msg.instance = mCurrent;
    msg.proof = proof;
    mHost.engineBroadcast(MsgType::DECIDE, encodeToBytes(msg));
    completeDecision(batch->second, proof);
}

void
ConsensusEngine::completeDecision(Batch const& batch,
                                  ConsensusProof const& proof)
{
    if (mState.decided)
    {
        return;
    }
    mState.decided = true;
    mState.pendingProof.reset();
    if (mState.progressArmed)
    {
        mHost.engineCancelTimer(EngineTimer::PROGRESS);
        mState.progressArmed = false;
    }
    if (mBatchTimerArmed)
    {
        mHost.engineCancelTimer(EngineTimer::BATCH);
        mBatchTimerArmed = false;
    }
    auto decided = [&batch](Transaction const& tx) {
        for (auto const& d : batch.transactions)
        {
            if (d.client == tx.client && d.sequence == tx.sequence)
            {
                return true;
            }
        }
        return false;
    };
    std::erase_if(mAppPool, decided);
    std::erase_if(mReconfigPool, decided);
    mDecisions[mCurrent] = {proof, batch};
    mHost.engineDeliver(mCurrent, batch, proof);
}

void
ConsensusEngine::armProgressTimer()
{
    auto shift = std::min<std::uint32_t>(mState.round, 10);
    mHost.engineArmTimer(EngineTimer::PROGRESS,
                         mConfig.progressTimeoutUs << shift);
    mState.progressArmed = true;
}

void
ConsensusEngine::onTimer(EngineTimer which)
{
    if (which == EngineTimer::BATCH)
    {
        mBatchTimerArmed = false;
        if (!mState.decided && !mState.proposed && mState.round == 0 &&
            leaderOf(mCurrent, 0) == mHost.engineSelf())
        {
            if (auto reconfig = assembleReconfigBatch())
            {
                proposeBatch(std::move(*reconfig), std::nullopt);
            }
            else if (!mAppPool.empty())
            {
                proposeBatch(assembleAppBatch(), std::nullopt);
            }
        }
        return;
    }
    mState.progressArmed = false;
    if (mState.decided || !mOpened)
    {
        return;
    }
    adoptRound(mState.round + 1);
    broadcastSync();
    maybeLeadRound(mState.round);
}

void
ConsensusEngine::adoptRound(std::uint32_t round)
{
    if (round <= mState.round)
    {
        return;
    }
    mState.round = round;
    mState.written = false;
    mState.accepted = false;
    mState.proposed = false;
    mState.proposalHash.reset();
    mState.validating.reset();
    armProgressTimer();
}

SyncMsg
ConsensusEngine::makeSyncMsg()
{
    SyncMsg msg;
    msg.report.replica = mHost.engineSelf();
    msg.report.instance = mCurrent;
    msg.report.round = mState.round;
    msg.report.lock = mState.lock;
    msg.report.signature =
        mHost.engineSign(msg.report.signingDigest(mHost.engineView().id));
    if (mState.lock)
    {
        auto batch = mState.batches.find(mState.lock->batchHash);
        if (batch != mState.batches.end())
        {
            msg.lockedBatch = batch->second;
        }
    }
    msg.decidedProof = mState.pendingProof;
    return msg;
}

void
ConsensusEngine::broadcastSync()
{
    SyncMsg msg;
    try
    {
        msg = makeSyncMsg();
    }
    catch (crypto::KeyForgottenError const&)
    {
        return;
    }
    SyncEntry entry;
    entry.report = msg.report;
    entry.lockedBatch = msg.lockedBatch;
    mState.syncs[mState.round].emplace(mHost.engineSelf(), std::move(entry));
    mHost.engineBroadcast(MsgType::SYNC, encodeToBytes(msg));
}

bool
ConsensusEngine::verifySyncReport(SyncReport const& report)
{
    auto const& view = mHost.engineView();
    if (report.instance != mCurrent || !view.contains(report.replica))
    {
        return false;
    }
    auto key = mHost.engineKeys().resolve(view.id, report.replica);
    if (!key ||
        !crypto::verify(*key, report.signingDigest(view.id),
                        report.signature))
    {
        return false;
    }
    if (report.lock)
    {
        if (report.lock->round >= report.round)
        {
            return false; // a lock can only come from an earlier round
        }
        if (!verifyLockProof(report.instance, *report.lock))
        {
            return false;
        }
    }
    return true;
}

bool
ConsensusEngine::verifyLockProof(InstanceId instance, LockProof const& lock)
{
    auto const& view = mHost.engineView();
    auto statement =
        writeVoteDigest(view.id, instance, lock.round, lock.batchHash);
    return countValidVotes(lock.writeVotes, statement, view,
                           mHost.engineKeys()) >= view.quorum();
}

std::optional<crypto::Digest>
ConsensusEngine::requiredHashFrom(SyncCertificate const& cert)
{
    std::optional<std::pair<std::uint32_t, crypto::Digest>> best;
    for (auto const& report : cert.reports)
    {
        if (!report.lock)
        {
            continue;
        }
        auto candidate =
            std::make_pair(report.lock->round, report.lock->batchHash);
        if (!best || candidate.first > best->first ||
            (candidate.first == best->first &&
             candidate.second < best->second))
        {
            best = candidate;
        }
    }
    if (!best)
    {
        return std::nullopt;
    }
    return best->second;
}

void
ConsensusEngine::maybeLeadRound(std::uint32_t round)
{
    if (mState.decided || round < mState.round || mState.proposed ||
        leaderOf(mCurrent, round) != mHost.engineSelf())
    {
        return;
    }
    auto syncs = mState.syncs.find(round);
    if (syncs == mState.syncs.end() ||
        syncs->second.size() < mHost.engineView().quorum())
    {
        return;
    }
    if (round > mState.round)
    {
        adoptRound(round);
        broadcastSync();
    }

    SyncCertificate cert;
    for (auto const& [replica, entry] : syncs->second)
    {
        cert.reports.push_back(entry.report);
    }
    auto required = requiredHashFrom(cert);
    Batch batch;
    if (required)
    {
        auto held = mState.batches.find(*required);
        if (held == mState.batches.end())
        {
            return; // wait for a sync report that carries the locked batch
        }
        batch = held->second;
    }
    else if (auto reconfig = assembleReconfigBatch())
    {
        batch = std::move(*reconfig);
    }
    else if (!mAppPool.empty())
    {
        batch = assembleAppBatch();
    }
    else
    {
        return;
    }
    proposeBatch(std::move(batch), std::move(cert));
}

void
ConsensusEngine::answerStraggler(ReplicaId peer, InstanceId instance)
{
    auto cached = mDecisions.find(instance);
    if (cached == mDecisions.end())
    {
        return;
    }
    DecideMsg msg;
    msg.instance = instance;
    msg.proof = cached->second.proof;
    msg.batch = cached->second.batch;
    mHost.engineSendTo(peer, MsgType::DECIDE, encodeToBytes(msg));
}

void
ConsensusEngine::onMessage(WireMessage const& msg)
{
    InstanceId instance = 0;
    try
    {
        // Consensus bodies lead with the instance number, except the sync
        // report whose reporting replica comes first.
        Decoder peek(msg.body);
        if (msg.type == MsgType::SYNC)
        {
            peek.u32();
        }
        instance = peek.u64();
    }
    catch (CodecError const&)
    {
        return;
    }

    if (mOpened && instance < mCurrent)
    {
        // The sender is behind; hand it the decision if we still have it.
        if (msg.type == MsgType::PROPOSE || msg.type == MsgType::SYNC)
        {
            answerStraggler(msg.sender, instance);
        }
        return;
    }
    if (!mOpened || instance > mCurrent)
    {
        if (instance <= mCurrent + mConfig.bufferWindow)
        {
            auto& slot = mBuffered[instance];
            if (slot.size() < 4096)
            {
                slot.push_back(msg);
            }
        }
        return;
    }
    if (msg.view != mHost.engineView().id && msg.type != MsgType::DECIDE)
    {
        // A cached decision relayed to a straggler is stamped with the
        // relayer's newer view; its proof is checked against our own view
        // below, so the stamp is irrelevant for that one type.
        return;
    }

    try
    {
        switch (msg.type)
        {
        case MsgType::PROPOSE:
            onPropose(msg);
            break;
        case MsgType::WRITE:
            onWrite(msg);
            break;
        case MsgType::ACCEPT:
            onAccept(msg);
            break;
        case MsgType::SYNC:
            onSync(msg);
            break;
        case MsgType::DECIDE:
            onDecide(msg);
            break;
        default:
            break;
        }
    }
    catch (CodecError const&)
    {
        // malformed body; drop
    }
}

void
ConsensusEngine::onPropose(WireMessage const& msg)
{
    if (mState.decided)
    {
        return;
    }
    auto m = parseBody<ProposeMsg>(msg);
    if (msg.sender != leaderOf(mCurrent, m.round) ||
        m.round < mState.round)
    {
        return;
    }

    std::optional<crypto::Digest> required;
    if (m.round > 0)
    {
        if (!m.syncCert)
        {
            return;
        }
        SyncCertificate verified;
        std::set<ReplicaId> seen;
        for (auto const& report : m.syncCert->reports)
        {
            if (report.round != m.round || seen.count(report.replica))
            {
                continue;
            }
            if (!verifySyncReport(report))
            {
                continue;
            }
            seen.insert(report.replica);
            verified.reports.push_back(report);
        }
        if (verified.reports.size() < mHost.engineView().quorum())
        {
            return;
        }
        required = requiredHashFrom(verified);
    }

    auto hash = m.batch.digest();
    if (required && hash != *required)
    {
        return;
    }
    if (m.round > mState.round)
    {
        adoptRound(m.round);
    }
    if (mState.proposalHash)
    {
        return; // one proposal per round; equivocation starves the quorum
    }
    mState.proposalHash = hash;
    mState.batches.emplace(hash, m.batch);
    armProgressTimer();

    if (mState.pendingProof && mState.pendingProof->batchHash == hash)
    {
        completeDecision(mState.batches[hash], *mState.pendingProof);
        return;
    }
    if (mState.validated.count(hash) || mState.certified.count(hash))
    {
        sendWrite(hash);
    }
    else
    {
        startValidation(hash, mState.batches[hash]);
    }
}

void
ConsensusEngine::onWrite(WireMessage const& msg)
{
    if (mState.decided)
    {
        return;
    }
    auto m = parseBody<WriteMsg>(msg);
    if (m.round != mState.round || m.vote.voter != msg.sender)
    {
        return;
    }
    auto const& view = mHost.engineView();
    if (!view.contains(m.vote.voter))
    {
        return;
    }
    if (m.vote.lateKey)
    {
        mHost.engineKeys().tryAdmit(*m.vote.lateKey);
    }
    auto key = mHost.engineKeys().resolve(view.id, m.vote.voter);
    if (!key)
    {
        return;
    }
    auto statement =
        writeVoteDigest(view.id, mCurrent, m.round, m.batchHash);
    if (!crypto::verify(*key, statement, m.vote.signature))
    {
        return;
    }
    recordWrite(m.vote.voter, m.round, m.batchHash, m.vote);
}

void
ConsensusEngine::onAccept(WireMessage const& msg)
{
    if (mState.decided)
    {
        return;
    }
    auto m = parseBody<AcceptMsg>(msg);
    if (m.vote.voter != msg.sender)
    {
        return;
    }
    auto const& view = mHost.engineView();
    if (!view.contains(m.vote.voter))
    {
        return;
    }
    if (m.vote.lateKey)
    {
        mHost.engineKeys().tryAdmit(*m.vote.lateKey);
    }
    auto key = mHost.engineKeys().resolve(view.id, m.vote.voter);
    if (!key)
    {
        return;
    }
    auto statement = acceptVoteDigest(view.id, mCurrent, m.batchHash);
    if (!crypto::verify(*key, statement, m.vote.signature))
    {
        return;
    }
    recordAccept(m.vote.voter, m.batchHash, m.vote);
}

void
ConsensusEngine::onSync(WireMessage const& msg)
{
    auto m = parseBody<SyncMsg>(msg);
    if (m.report.replica != msg.sender)
    {
        return;
    }
    if (mState.decided)
    {
        answerStraggler(msg.sender, mCurrent);
        return;
    }
    if (!verifySyncReport(m.report))
    {
        return;
    }
    if (m.report.lock && m.lockedBatch &&
        m.lockedBatch->digest() == m.report.lock->batchHash)
    {
        mState.batches.emplace(m.report.lock->batchHash, *m.lockedBatch);
    }
    if (m.report.lock)
    {
        mState.certified.insert(m.report.lock->batchHash);
        if (!mState.lock || mState.lock->round < m.report.lock->round)
        {
            mState.lock = m.report.lock;
        }
    }
    if (m.decidedProof)
    {
        auto const& proof = *m.decidedProof;
        if (proof.instance == mCurrent &&
            verifyDecisionProof(proof, mHost.engineView(),
                                mHost.engineKeys()))
        {
            auto batch = mState.batches.find(proof.batchHash);
            if (batch != mState.batches.end())
            {
                completeDecision(batch->second, proof);
                answerStraggler(msg.sender, mCurrent);
                return;
            }
            mState.pendingProof = proof;
        }
    }

    SyncEntry entry;
    entry.report = m.report;
    entry.lockedBatch = m.lockedBatch;
    mState.syncs[m.report.round].insert_or_assign(m.report.replica,
                                                  std::move(entry));

    // f + 1 members already moved past our round: joining them is safe
    // because at least one is correct.
    if (m.report.round > mState.round)
    {
        std::map<ReplicaId, std::uint32_t> ahead;
        for (auto const& [round, entries] : mState.syncs)
        {
            if (round <= mState.round)
            {
                continue;
            }
            for (auto const& [replica, e] : entries)
            {
                auto it = ahead.find(replica);
                if (it == ahead.end() || it->second > round)
                {
                    ahead[replica] = round;
                }
            }
        }
        if (ahead.size() >= mHost.engineView().f + 1)
        {
            std::uint32_t target = 0;
            bool first = true;
            for (auto const& [replica, round] : ahead)
            {
                if (first || round < target)
                {
                    target = round;
                }
                first = false;
            }
            if (target > mState.round)
            {
                adoptRound(target);
                broadcastSync();
            }
        }
    }
    maybeLeadRound(m.report.round);
}

void
ConsensusEngine::onDecide(WireMessage const& msg)
{
    if (mState.decided)
    {
        return;
    }
    auto m = parseBody<DecideMsg>(msg);
    if (m.instance != mCurrent || m.proof.instance != mCurrent)
    {
        return;
    }
    if (!verifyDecisionProof(m.proof, mHost.engineView(),
                             mHost.engineKeys()))
    {
        return;
    }
    if (m.batch && m.batch->digest() == m.proof.batchHash)
    {
        mState.batches.emplace(m.proof.batchHash, *m.batch);
    }
    auto batch = mState.batches.find(m.proof.batchHash);
    if (batch == mState.batches.end())
    {
        mState.pendingProof = m.proof;
        if (!mState.progressArmed)
        {
            armProgressTimer();
        }
        return;
    }
    completeDecision(batch->second, m.proof);
}

} // namespace bftchain
