// Copyright 2026 the bftchain authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include "bftchain/chain_core.hpp"

#include <algorithm>

namespace bftchain
{

char const*
nameOf(CorePhase p)
{
    switch (p)
    {
    case CorePhase::IDLE:
        return "IDLE";
    case CorePhase::AWAIT_SYNC:
        return "AWAIT_SYNC";
    case CorePhase::AWAIT_CERT:
        return "AWAIT_CERT";
    }
    return "?";
}

StResponders
stResponders(View const& view, ProcessId requester, std::uint32_t attempt)
{
    StResponders out;
    auto n = view.members.size();
    if (n == 0)
    {
        return out;
    }
    std::size_t idx = n;
    for (std::size_t i = 0; i < n; ++i)
    {
        if (view.members[i].id == requester)
        {
            idx = i;
            break;
        }
    }
    std::size_t start = idx == n ? requester % n : idx;
    std::vector<ReplicaId> ring;
    for (std::size_t step = 1; step <= n; ++step)
    {
        auto const& m = view.members[(start + step) % n];
        if (m.id != requester)
        {
            ring.push_back(m.id);
        }
    }
    if (ring.empty())
    {
        return out;
    }
    out.full = ring[attempt % ring.size()];
    auto extras = std::min<std::size_t>(view.f, ring.size() - 1);
    for (std::size_t j = 1; j <= extras; ++j)
    {
        out.digests.push_back(ring[(attempt + j) % ring.size()]);
    }
    return out;
}

ChainCore::ChainCore(GenesisBlock genesis, Application& app, CoreHost& host)
    : mGenesis(std::move(genesis)), mApp(app), mHost(host)
{
    mView = mGenesis.initialView;
    mLastHash = crypto::emptyDigest();
}

void
ChainCore::initFresh()
{
    if (auto err = mGenesis.validate())
    {
        mHost.coreFatal("genesis block invalid: " + *err);
        return;
    }
    mHost.coreKeys().addView(mView);

    Record rec;
    rec.type = RecordType::GENESIS;
    rec.block = 0;
    rec.payload = encodeToBytes(mGenesis);
    mHost.coreEnqueueRecord(rec);
    mBooting = true;
    mPhase = CorePhase::AWAIT_SYNC;
    mHost.coreRequestSync();
}

void
ChainCore::adopt(AdoptedState state)
{
    mBNum = state.nextBlock;
    mLastReconfig = state.lastReconfig;
    mLastCheckpoint = state.lastCheckpoint;
    mLastHash = state.lastHash;
    mView = std::move(state.view);
    mExec = std::move(state.exec);
    mSnapshot = std::move(state.snapshot);
    mHeaderHash = std::move(state.headerHashes);
    mCertified = std::move(state.certified);
    mPhase = CorePhase::IDLE;
    mClosing.reset();
    mCertVotes.clear();
    mMismatchVotes.clear();
    mStashedVotes.clear();
}

bool
ChainCore::isFresh(ClientId client, std::uint64_t sequence) const
{
    return mExec.isFresh(client, sequence);
}

std::optional<ClientRecord>
ChainCore::clientRecord(ClientId client) const
{
    auto it = mExec.clients.find(client);
    if (it == mExec.clients.end())
    {
        return std::nullopt;
    }
    return it->second;
}

crypto::Digest
ChainCore::stateDigest()
{
    return replicaStateDigest(mExec, mApp);
}

bool
ChainCore::validateBatch(Batch const& batch)
{
    if (batch.transactions.empty() || batch.transactions.size() > 512)
    {
        return false;
    }
    if (batch.kind == BatchKind::APPLICATION)
    {
        return appBatchAdmissible(mExec, mApp, batch);
    }
    for (auto const& tx : batch.transactions)
    {
        if (tx.kind != TxKind::RECONFIGURATION)
        {
            return false;
        }
    }
    auto plan = planReconfig(batch.transactions);
    if (!plan)
    {
        return false;
    }
    for (auto accepted : plan->txAccepted)
    {
        if (!accepted)
        {
            return false;
        }
    }
    return true;
}

std::optional<reconfig::ReconfigPlan>
ChainCore::planReconfig(std::vector<Transaction> const& txs) const
{
    return reconfig::validateReconfigBatch(mView, txs, mExec.sequenceView());
}

std::optional<SignedVote>
ChainCore::makeVote(crypto::Digest const& statement)
{
    SignedVote vote;
    vote.voter = mHost.coreSelf();
    try
    {
        vote.signature = mHost.coreSign(statement);
    }
    catch (crypto::KeyForgottenError const&)
    {
        return std::nullopt; // not a member of the current view any more
    }
    if (!mHost.coreSelfKeyInRecord())
    {
        vote.lateKey = mHost.coreSelfKey();
    }
    return vote;
}

void
ChainCore::onDelivered(InstanceId instance, Batch const& batch,
                       ConsensusProof const& proof)
{
    if (mPhase != CorePhase::IDLE)
    {
        mHost.coreFatal("decision delivered while a block is in flight");
        return;
    }
    if (instance != mBNum)
    {
        mHost.coreFatal("decision instance does not match the next block");
        return;
    }
    if (proof.instance != instance || proof.batchHash != batch.digest() ||
        !verifyDecisionProof(proof, mView, mHost.coreKeys()))
    {
        mHost.coreFatal("delivered decision proof does not verify");
        return;
    }

    ClosingBlock closing;
    closing.block = mBNum;
    closing.batch = batch;

    TxBatchPayload body;
    body.consensusId = instance;
    body.batch = batch;
    body.proof = proof;

    Record bodyRec;
    bodyRec.block = mBNum;
    std::optional<View> installed;

    if (batch.kind == BatchKind::RECONFIGURATION)
    {
        auto plan = planReconfig(batch.transactions);
        bool accepted = plan.has_value();
        if (plan)
        {
            for (auto a : plan->txAccepted)
            {
                accepted = accepted && a;
            }
        }
        if (!accepted)
        {
            mHost.coreFatal("ordered reconfiguration batch is not valid "
                            "against the executed prefix");
            return;
        }
        ReconfigPayload payload;
        payload.base = body;
        payload.newView = plan->newView;
        bodyRec.type = RecordType::RECONFIG_TXBATCH;
        bodyRec.payload = encodeToBytes(payload);
        mHost.coreEnqueueRecord(bodyRec);

        closing.results = executeReconfigBatch(mExec, mBNum, batch, *plan);
        closing.reconfig = true;
        installed = plan->newView;
    }
    else
    {
        if (!appBatchAdmissible(mExec, mApp, batch))
        {
            mHost.coreFatal("ordered application batch is not admissible "
                            "against the executed prefix");
            return;
        }
        bodyRec.type = RecordType::TXBATCH;
        bodyRec.payload = encodeToBytes(body);
        mHost.coreEnqueueRecord(bodyRec);

        closing.results = executeAppBatch(mExec, mApp, mBNum, batch);
    }

    ResultsPayload resultsPayload;
    resultsPayload.results = closing.results;
    Record resultsRec;
    resultsRec.type = RecordType::RESULTS;
    resultsRec.block = mBNum;
    resultsRec.payload = encodeToBytes(resultsPayload);
    mHost.coreEnqueueRecord(resultsRec);

    mClosing = std::move(closing);

    if (installed)
    {
        // The successor view takes effect before the block is closed: its
        // own certificate is collected under the new keys, while its
        // decision proof stays verifiable under the previous view.
        mHost.coreKeys().addView(*installed);
        mView = *installed;
        mHost.coreViewInstalled(mView);
    }

    closeBlock(txBatchDigest(batch.transactions, proof),
               resultsDigest(mClosing->results));
}

void
ChainCore::closeBlock(crypto::Digest const& txHash,
                      crypto::Digest const& resultsHash)
{
    BlockHeader header;
    header.number = mBNum;
    header.lastReconfig = mLastReconfig;
    header.lastCheckpoint = mLastCheckpoint;
    header.txBatchHash = txHash;
    header.resultsHash = resultsHash;
    header.prevHash = mLastHash;

    Record rec;
    rec.type = RecordType::HEADER;
    rec.block = mBNum;
    rec.payload = encodeToBytes(header);
    mHost.coreEnqueueRecord(rec);

    mClosing->headerHash = header.digest();
    mPhase = CorePhase::AWAIT_SYNC;
    mHost.coreRequestSync();
}

void
ChainCore::onSyncDone()
{
    if (mBooting)
    {
        mBooting = false;
        mPhase = CorePhase::IDLE;
        mHost.coreBlockFinished(0);
        return;
    }
    if (mPhase != CorePhase::AWAIT_SYNC || !mClosing)
    {
        return;
    }
    mLastHash = mClosing->headerHash;
    mHeaderHash.emplace(mClosing->block, mClosing->headerHash);

    if (mGenesis.persistence == PersistenceVariant::STRONG)
    {
        startPersistRound();
    }
    else
    {
        finishBlock();
    }
}

void
ChainCore::startPersistRound()
{
    mPhase = CorePhase::AWAIT_CERT;
    mCertVotes.clear();
    mMismatchVotes.clear();

    auto const& closing = *mClosing;
    if (auto vote = makeVote(closing.headerHash))
    {
        PersistMsg msg;
        msg.block = closing.block;
        msg.headerHash = closing.headerHash;
        msg.vote = *vote;
        mHost.coreBroadcast(MsgType::PERSIST, encodeToBytes(msg));
        mCertVotes.emplace(vote->voter, *vote);
    }

    auto stashed = mStashedVotes.find(closing.block);
    if (stashed != mStashedVotes.end())
    {
        auto pending = std::move(stashed->second);
        mStashedVotes.erase(stashed);
        for (auto const& [sender, msg] : pending)
        {
            countPersistVote(sender, msg);
        }
    }
    maybeCertify();
}

bool
ChainCore::verifyPersistVote(ReplicaId sender, PersistMsg const& msg)
{
    if (msg.vote.voter != sender || !mView.contains(sender))
    {
        return false;
    }
    if (msg.vote.lateKey)
    {
        mHost.coreKeys().tryAdmit(*msg.vote.lateKey);
    }
    auto key = mHost.coreKeys().resolve(mView.id, sender);
    // The vote signs the sender's own header digest for this block.
    return key && crypto::verify(*key, msg.headerHash, msg.vote.signature);
}

void
ChainCore::countPersistVote(ReplicaId sender, PersistMsg const& msg)
{
    if (!verifyPersistVote(sender, msg))
    {
        return;
    }
    if (msg.headerHash == mClosing->headerHash)
    {
        mCertVotes.emplace(sender, msg.vote);
        return;
    }
    auto& voters = mMismatchVotes[msg.headerHash];
    voters.insert(sender);
    if (voters.size() >= mView.quorum())
    {
        // A quorum certified a different header: our copy of this block
        // diverged and must be replaced with the certified one.
        mHost.coreCertMismatch(mClosing->block, msg.headerHash);
    }
}

void
ChainCore::maybeCertify()
{
    if (mPhase != CorePhase::AWAIT_CERT || !mClosing ||
        mCertVotes.size() < mView.quorum())
    {
        return;
    }
    Certificate cert;
    cert.block = mClosing->block;
    for (auto const& [voter, vote] : mCertVotes)
    {
        if (cert.votes.size() >= mView.quorum())
        {
            break;
        }
        cert.votes.push_back(vote);
    }

    // Appended asynchronously with no second barrier: after a full crash
    // here, every replica can only re-derive the same certificate content.
    Record rec;
    rec.type = RecordType::CERT;
    rec.block = cert.block;
    rec.payload = encodeToBytes(cert);
    mHost.coreEnqueueRecord(rec);
    mCertified.insert(cert.block);
    finishBlock();
}

void
ChainCore::finishBlock()
{
    auto closing = std::move(*mClosing);
    mClosing.reset();
    mCertVotes.clear();
    mMismatchVotes.clear();
    mStashedVotes.erase(mStashedVotes.begin(),
                        mStashedVotes.upper_bound(closing.block));

    if (closing.recertify)
    {
        mPhase = CorePhase::IDLE;
        mHost.coreBlockFinished(closing.block);
        return;
    }

    for (std::size_t i = 0; i < closing.batch.transactions.size(); ++i)
    {
        auto const& tx = closing.batch.transactions[i];
        ReplyMsg reply;
        reply.client = tx.client;
        reply.sequence = tx.sequence;
        reply.block = closing.block;
        reply.position = static_cast<std::uint32_t>(i);
        reply.viewId = mView.id;
        reply.viewN = mView.n();
        reply.viewF = mView.f;
        reply.result = closing.results[i].payload;
        mHost.coreReply(tx.client, reply);
    }

    if (closing.reconfig)
    {
        mLastReconfig = static_cast<std::int64_t>(closing.block);
    }
    if (closing.block % mGenesis.checkpointPeriod == 0)
    {
        mLastCheckpoint = static_cast<std::int64_t>(closing.block);
        Snapshot snap;
        snap.lastBlockCovered = closing.block;
        snap.statePayload = replicaStatePayload(mExec, mApp);
        snap.stateDigest = crypto::sha256(snap.statePayload);
        mSnapshot = snap;
        mHost.coreWriteSnapshot(closing.block / mGenesis.checkpointPeriod,
                                snap);
    }

    mBNum = closing.block + 1;
    mPhase = CorePhase::IDLE;
    mHost.coreBlockFinished(closing.block);
}

void
ChainCore::recertifyTrailing()
{
    if (mPhase != CorePhase::IDLE || mBNum < 2 ||
        mGenesis.persistence != PersistenceVariant::STRONG)
    {
        return;
    }
    auto block = mBNum - 1;
    if (mCertified.count(block) || !mHeaderHash.count(block))
    {
        return;
    }
    ClosingBlock closing;
    closing.block = block;
    closing.headerHash = mHeaderHash.at(block);
    closing.recertify = true;
    mClosing = std::move(closing);
    startPersistRound();
}

void
ChainCore::resendPersist()
{
    if (mPhase != CorePhase::AWAIT_CERT || !mClosing)
    {
        return;
    }
    if (auto vote = makeVote(mClosing->headerHash))
    {
        PersistMsg msg;
        msg.block = mClosing->block;
        msg.headerHash = mClosing->headerHash;
        msg.vote = *vote;
        mHost.coreBroadcast(MsgType::PERSIST, encodeToBytes(msg));
    }
}

void
ChainCore::onPersist(ReplicaId sender, PersistMsg const& msg)
{
    if (mPhase == CorePhase::AWAIT_CERT && mClosing &&
        msg.block == mClosing->block)
    {
        countPersistVote(sender, msg);
        maybeCertify();
        return;
    }
    if (msg.block >= mBNum)
    {
        // A faster quorum can certify ahead of us; hold the votes until our
        // own header for that block is durable.
        if (msg.block < mBNum + 8)
        {
            auto& slot = mStashedVotes[msg.block];
            if (slot.size() < 256)
            {
                slot.emplace_back(sender, msg);
            }
        }
        return;
    }
    // The sender is re-certifying a block we are already past: help it by
    // re-signing our own header for that block. Help is only owed to
    // original votes; answering an answer would bounce forever between two
    // replicas that are both past the block.
    if (msg.answer)
    {
        return;
    }
    auto header = mHeaderHash.find(msg.block);
    if (header == mHeaderHash.end() || header->second != msg.headerHash)
    {
        return;
    }
    if (auto vote = makeVote(header->second))
    {
        PersistMsg answer;
        answer.block = msg.block;
        answer.headerHash = header->second;
        answer.vote = *vote;
        answer.answer = true;
        mHost.coreSendTo(sender, MsgType::PERSIST, encodeToBytes(answer));
    }
}

std::int64_t
ChainCore::lastDurableBlock(std::vector<Record> const& records) const
{
    std::int64_t latest = -1;
    for (auto const& rec : records)
    {
        if (rec.type == RecordType::GENESIS)
        {
            latest = std::max<std::int64_t>(latest, 0);
        }
        else if (rec.type == RecordType::HEADER)
        {
            latest =
                std::max<std::int64_t>(latest,
                                       static_cast<std::int64_t>(rec.block));
        }
    }
    return latest;
}

std::optional<Snapshot>
ChainCore::snapshotCovering(BlockNum cover)
{
    if (mSnapshot && mSnapshot->lastBlockCovered == cover)
    {
        return mSnapshot;
    }
    auto loaded =
        mHost.coreLoadSnapshot(cover / mGenesis.checkpointPeriod);
    if (loaded && loaded->lastBlockCovered == cover)
    {
        return loaded;
    }
    return std::nullopt;
}

void
ChainCore::onStateRequest(ProcessId sender, StReqMsg const& req)
{
    auto ledger = mHost.coreSyncedLedger();
    auto scan = scanRecords(ledger);

    if (req.phase == StPhase::PROBE)
    {
        StRepMsg rep;
        rep.kind = StRepKind::PROBE;
        rep.latest = lastDurableBlock(scan.records);
        mHost.coreSendTo(sender, MsgType::ST_REP, encodeToBytes(rep));
        return;
    }

    auto roles = stResponders(mView, sender, req.attempt);
    bool full = roles.full && *roles.full == mHost.coreSelf();
    if (req.attempt >= mView.n())
    {
        // A full rotation of attempts failed, so the requester is probably
        // computing duties from a different view than ours (mass recovery).
        // Every member serves the full reply then, trading bandwidth for
        // guaranteed progress.
        full = true;
    }

    StRepMsg rep;
    rep.target = req.target;
    rep.fromBlock = req.fromBlock;
    rep.attempt = req.attempt;
    rep.latest = lastDurableBlock(scan.records);

    // The handover always carries the full records for the requested range;
    // the snapshot merely spares the requester from re-executing the blocks
    // it covers.
    auto z = mGenesis.checkpointPeriod;
    BlockNum cover = (req.target / z) * z;
    std::optional<Snapshot> snap;
    if (cover > 0 && static_cast<std::int64_t>(cover) > req.fromBlock)
    {
        snap = snapshotCovering(cover);
    }

    if (!full)
    {
        // Everyone not serving the records attests the snapshot with its
        // digest; the requester trusts a snapshot only once the full
        // responder plus matching attesters span f+1 current members.
        rep.kind = StRepKind::DIGEST;
        if (snap)
        {
            rep.snapshotDigest = crypto::sha256(encodeToBytes(*snap));
        }
        mHost.coreSendTo(sender, MsgType::ST_REP, encodeToBytes(rep));
        return;
    }

    auto sendUnavailable = [&] {
        rep.kind = StRepKind::UNAVAILABLE;
        mHost.coreSendTo(sender, MsgType::ST_REP, encodeToBytes(rep));
    };
    if (rep.latest < static_cast<std::int64_t>(req.target))
    {
        sendUnavailable();
        return;
    }

    struct Parts
    {
        Record const* body = nullptr;
        Record const* results = nullptr;
        Record const* header = nullptr;
        Record const* cert = nullptr;
    };
    Record const* genesisRec = nullptr;
    std::map<BlockNum, Parts> parts;
    for (auto const& rec : scan.records)
    {
        switch (rec.type)
        {
        case RecordType::GENESIS:
            genesisRec = &rec;
            break;
        case RecordType::TXBATCH:
        case RecordType::RECONFIG_TXBATCH:
            parts[rec.block].body = &rec;
            break;
        case RecordType::RESULTS:
            parts[rec.block].results = &rec;
            break;
        case RecordType::HEADER:
            parts[rec.block].header = &rec;
            break;
        case RecordType::CERT:
            parts[rec.block].cert = &rec;
            break;
        }
    }

    Bytes stream;
    auto append = [&stream](Record const& rec) {
        auto frame = frameRecord(rec);
        stream.insert(stream.end(), frame.begin(), frame.end());
    };
    if (req.fromBlock < 0)
    {
        if (!genesisRec)
        {
            sendUnavailable();
            return;
        }
        append(*genesisRec);
    }
    else if (req.fromBlock >= 1)
    {
        // The requester's boundary block may have lost its certificate to
        // the crash (it trails the header by one barrier); resupply it so
        // the stitched ledger is not missing a mid-chain certificate.
        auto boundary = parts.find(static_cast<BlockNum>(req.fromBlock));
        if (boundary != parts.end() && boundary->second.cert)
        {
            append(*boundary->second.cert);
        }
    }
    BlockNum first = req.fromBlock < 1
                         ? 1
                         : static_cast<BlockNum>(req.fromBlock) + 1;
    for (BlockNum b = first; b <= req.target; ++b)
    {
        auto it = parts.find(b);
        if (it == parts.end() || !it->second.body || !it->second.results ||
            !it->second.header)
        {
            sendUnavailable();
            return;
        }
        append(*it->second.body);
        append(*it->second.results);
        append(*it->second.header);
        if (it->second.cert)
        {
            append(*it->second.cert);
        }
    }

    rep.kind = StRepKind::FULL;
    rep.recordStream = std::move(stream);
    rep.snapshot = snap;
    mHost.coreSendTo(sender, MsgType::ST_REP, encodeToBytes(rep));
}

} // namespace bftchain
