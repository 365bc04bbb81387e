// Copyright 2026 the bftchain authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include "bftchain/chain_verifier.hpp"

#include <sstream>

namespace bftchain
{

ChainVerifier::ChainVerifier(GenesisBlock genesis, Application& app)
    : mGenesis(std::move(genesis)), mApp(app)
{
    mLastHash = crypto::emptyDigest();
}

bool
ChainVerifier::seedSnapshot(Snapshot const& snapshot)
{
    if (crypto::sha256(snapshot.statePayload) != snapshot.stateDigest)
    {
        return false;
    }
    try
    {
        restoreReplicaState(mExec, mApp, snapshot.statePayload);
    }
    catch (CodecError const&)
    {
        return false;
    }
    catch (std::runtime_error const&)
    {
        return false;
    }
    mSeedCover = snapshot.lastBlockCovered;
    return true;
}

void
ChainVerifier::fail(std::int64_t block, std::string what)
{
    VerifyIssue issue;
    issue.block = block;
    issue.what = std::move(what);
    mIssues.push_back(std::move(issue));
}

bool
ChainVerifier::processGenesis(Record const& rec)
{
    if (rec.type != RecordType::GENESIS)
    {
        fail(-1, "ledger does not begin with a genesis record");
        return false;
    }
    if (rec.block != 0)
    {
        fail(0, "genesis record carries a nonzero block number");
        return false;
    }
    if (auto err = mGenesis.validate())
    {
        fail(0, "trusted genesis block invalid: " + *err);
        return false;
    }
    if (rec.payload != encodeToBytes(mGenesis))
    {
        fail(0, "genesis record does not match the trusted genesis block");
        return false;
    }
    mView = mGenesis.initialView;
    mKeys.addView(mView);
    mExpect = Expect::BODY;
    return true;
}

bool
ChainVerifier::processBody(Record const& rec)
{
    if (mExpect != Expect::BODY)
    {
        fail(static_cast<std::int64_t>(rec.block),
             "transaction batch record out of order");
        return false;
    }
    if (rec.block != mNext)
    {
        std::ostringstream msg;
        msg << "expected block " << mNext << ", found batch record for block "
            << rec.block;
        fail(static_cast<std::int64_t>(rec.block), msg.str());
        return false;
    }
    auto blk = static_cast<std::int64_t>(mNext);

    TxBatchPayload body;
    if (rec.type == RecordType::RECONFIG_TXBATCH)
    {
        auto payload = decodeFromBytes<ReconfigPayload>(rec.payload);
        body = std::move(payload.base);
        mPendingView = std::move(payload.newView);
    }
    else
    {
        body = decodeFromBytes<TxBatchPayload>(rec.payload);
        mPendingView.reset();
    }

    if (body.consensusId != mNext)
    {
        fail(blk, "consensus instance number does not match block number");
        return false;
    }
    auto expectedKind = rec.type == RecordType::RECONFIG_TXBATCH
                            ? BatchKind::RECONFIGURATION
                            : BatchKind::APPLICATION;
    if (body.batch.kind != expectedKind)
    {
        fail(blk, "batch kind does not match record type");
        return false;
    }
    if (body.batch.transactions.empty())
    {
        fail(blk, "empty transaction batch");
        return false;
    }
    if (body.batch.transactions.size() > 512)
    {
        fail(blk, "transaction batch exceeds the batch size limit");
        return false;
    }
    if (body.proof.instance != body.consensusId ||
        body.proof.batchHash != body.batch.digest())
    {
        fail(blk, "decision proof does not cover this batch");
        return false;
    }
    if (!verifyDecisionProof(body.proof, mView, mKeys))
    {
        fail(blk, "decision proof invalid under the view in force");
        return false;
    }
    mPendingBody = std::move(body);
    mExpect = Expect::RESULTS;
    return true;
}

bool
ChainVerifier::processResults(Record const& rec)
{
    if (mExpect != Expect::RESULTS)
    {
        fail(static_cast<std::int64_t>(rec.block), "results record out of order");
        return false;
    }
    if (rec.block != mNext)
    {
        fail(static_cast<std::int64_t>(rec.block),
             "results record for the wrong block");
        return false;
    }
    auto payload = decodeFromBytes<ResultsPayload>(rec.payload);
    if (payload.results.size() != mPendingBody->batch.transactions.size())
    {
        fail(static_cast<std::int64_t>(mNext),
             "result count does not match transaction count");
        return false;
    }
    mPendingResults = std::move(payload.results);
    mExpect = Expect::HEADER;
    return true;
}

bool
ChainVerifier::processHeader(Record const& rec)
{
    if (mExpect != Expect::HEADER)
    {
        fail(static_cast<std::int64_t>(rec.block), "header record out of order");
        return false;
    }
    if (rec.block != mNext)
    {
        fail(static_cast<std::int64_t>(rec.block),
             "header record for the wrong block");
        return false;
    }
    auto blk = static_cast<std::int64_t>(mNext);
    auto header = decodeFromBytes<BlockHeader>(rec.payload);

    if (header.number != mNext)
    {
        fail(blk, "header block number mismatch");
        return false;
    }
    if (header.prevHash != mLastHash)
    {
        fail(blk, "previous-block hash breaks the chain");
        return false;
    }
    if (header.lastReconfig != mLastReconfig)
    {
        fail(blk, "header lastReconfig pointer incorrect");
        return false;
    }
    if (header.lastCheckpoint != mLastCheckpoint)
    {
        fail(blk, "header lastCheckpoint pointer incorrect");
        return false;
    }
    auto const& body = *mPendingBody;
    if (header.txBatchHash !=
        txBatchDigest(body.batch.transactions, body.proof))
    {
        fail(blk, "header txBatchHash does not cover the recorded batch");
        return false;
    }
    if (header.resultsHash != resultsDigest(mPendingResults))
    {
        fail(blk, "header resultsHash does not cover the recorded results");
        return false;
    }

    bool reconfig = body.batch.kind == BatchKind::RECONFIGURATION;
    if (reconfig)
    {
        auto const& newView = *mPendingView;
        if (auto err = newView.validate())
        {
            fail(blk, "recorded successor view invalid: " + *err);
            return false;
        }
        if (newView.id != mView.id + 1)
        {
            fail(blk, "successor view id does not increment");
            return false;
        }
        if (newView.consensusKeyCount() +
                static_cast<std::size_t>(newView.f) <
            newView.n())
        {
            fail(blk, "too few consensus keys recorded for the new view");
            return false;
        }
    }

    if (mNext > mSeedCover)
    {
        if (reconfig)
        {
            auto plan = reconfig::validateReconfigBatch(
                mView, body.batch.transactions, mExec.sequenceView());
            if (!plan)
            {
                fail(blk, "reconfiguration batch does not produce a view");
                return false;
            }
            for (auto accepted : plan->txAccepted)
            {
                if (!accepted)
                {
                    fail(blk, "reconfiguration batch contains a rejected "
                              "transaction");
                    return false;
                }
            }
            if (encodeToBytes(plan->newView) != encodeToBytes(*mPendingView))
            {
                fail(blk, "recorded successor view does not match the "
                          "recomputed one");
                return false;
            }
            auto computed =
                executeReconfigBatch(mExec, mNext, body.batch, *plan);
            if (computed != mPendingResults)
            {
                fail(blk, "recorded reconfiguration results do not match "
                          "re-execution");
                return false;
            }
        }
        else
        {
            if (!appBatchAdmissible(mExec, mApp, body.batch))
            {
                fail(blk, "application batch is not admissible against the "
                          "executed prefix");
                return false;
            }
            auto computed = executeAppBatch(mExec, mApp, mNext, body.batch);
            if (computed != mPendingResults)
            {
                for (std::size_t i = 0; i < computed.size(); ++i)
                {
                    if (computed[i] != mPendingResults[i])
                    {
                        std::ostringstream msg;
                        msg << "recorded result diverges from re-execution "
                               "at position "
                            << i;
                        fail(blk, msg.str());
                        break;
                    }
                }
                return false;
            }
        }
    }
    else if (reconfig)
    {
        // Not executing this prefix: the recorded results (whose hash the
        // certificate quorum signed) must still commit to the same
        // successor view bytes the payload carries.
        auto viewBytes = encodeToBytes(*mPendingView);
        bool anchored = false;
        for (auto const& result : mPendingResults)
        {
            try
            {
                auto rr = decodeFromBytes<reconfig::ReconfigResult>(
                    result.payload);
                if (rr.accepted && rr.newViewBytes == viewBytes)
                {
                    anchored = true;
                    break;
                }
            }
            catch (CodecError const&)
            {
            }
        }
        if (!anchored)
        {
            fail(blk, "recorded successor view is not anchored in the "
                      "block's results");
            return false;
        }
    }

    if (reconfig)
    {
        mKeys.addView(*mPendingView);
        mView = *mPendingView;
    }

    auto hash = header.digest();
    mHeaderHash.emplace(mNext, hash);
    mCertView.emplace(mNext, mView.id);
    mLastHash = hash;
    mLastComplete = mNext;

    if (reconfig)
    {
        mLastReconfig = static_cast<std::int64_t>(mNext);
    }
    if (mNext % mGenesis.checkpointPeriod == 0)
    {
        mLastCheckpoint = static_cast<std::int64_t>(mNext);
        if (mNext > mSeedCover && onCheckpoint)
        {
            Snapshot snap;
            snap.lastBlockCovered = mNext;
            snap.statePayload = replicaStatePayload(mExec, mApp);
            snap.stateDigest = crypto::sha256(snap.statePayload);
            onCheckpoint(snap);
        }
    }

    ++mNext;
    mExpect = Expect::BODY;
    mPendingBody.reset();
    mPendingView.reset();
    mPendingResults.clear();
    return true;
}

bool
ChainVerifier::processCert(Record const& rec)
{
    auto cert = decodeFromBytes<Certificate>(rec.payload);
    auto blk = static_cast<std::int64_t>(rec.block);
    if (cert.block != rec.block)
    {
        fail(blk, "certificate payload block number mismatch");
        return false;
    }
    auto header = mHeaderHash.find(cert.block);
    if (header == mHeaderHash.end())
    {
        fail(blk, "certificate for a block with no verified header");
        return false;
    }
    if (mCertified.count(cert.block))
    {
        return true; // duplicate certificate record; first one counted
    }
    auto const* view = mKeys.view(mCertView.at(cert.block));
    if (!verifyCertificate(cert, header->second, *view, mKeys))
    {
        fail(blk, "certificate invalid under the view in force");
        return false;
    }
    mCertified.insert(cert.block);
    return true;
}

bool
ChainVerifier::processRecord(Record const& rec)
{
    try
    {
        if (mExpect == Expect::GENESIS)
        {
            return processGenesis(rec);
        }
        switch (rec.type)
        {
        case RecordType::GENESIS:
            fail(static_cast<std::int64_t>(rec.block),
                 "second genesis record");
            return false;
        case RecordType::TXBATCH:
        case RecordType::RECONFIG_TXBATCH:
            return processBody(rec);
        case RecordType::RESULTS:
            return processResults(rec);
        case RecordType::HEADER:
            return processHeader(rec);
        case RecordType::CERT:
            return processCert(rec);
        }
    }
    catch (CodecError const& e)
    {
        fail(static_cast<std::int64_t>(rec.block),
             std::string("malformed record payload: ") + e.what());
        return false;
    }
    fail(static_cast<std::int64_t>(rec.block), "unknown record type");
    return false;
}

VerifyReport
ChainVerifier::verify(ByteSpan stream)
{
    auto scan = scanRecords(stream);

    bool aborted = false;
    if (scan.records.empty())
    {
        fail(-1, "ledger holds no complete records");
        aborted = true;
    }
    for (auto const& rec : scan.records)
    {
        if (!processRecord(rec))
        {
            aborted = true;
            break;
        }
    }

    VerifyReport report;
    report.lastComplete = mLastComplete;
    if (scan.tailError)
    {
        VerifyIssue issue;
        issue.block = -1;
        issue.what = "record framing damaged: " + *scan.tailError;
        issue.offset = scan.cleanEnd;
        mIssues.push_back(std::move(issue));
        report.corruptOffset = scan.cleanEnd;
    }
    report.partialTrailing =
        !aborted && mExpect != Expect::BODY && mExpect != Expect::GENESIS;

    // The strong variant guarantees a certificate for every block except
    // possibly the most recent one (its certificate write is asynchronous).
    if (!aborted && mGenesis.persistence == PersistenceVariant::STRONG &&
        mLastComplete > 0)
    {
        for (BlockNum b = 1; b + 1 <= mLastComplete; ++b)
        {
            if (!mCertified.count(b))
            {
                std::ostringstream msg;
                msg << "missing certificate for block " << b;
                fail(static_cast<std::int64_t>(b), msg.str());
            }
        }
    }

    report.issues = mIssues;
    report.fullyValid = mIssues.empty() && !report.corruptOffset &&
                        !report.partialTrailing;
    return report;
}

} // namespace bftchain
