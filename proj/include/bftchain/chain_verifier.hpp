// Copyright 2026 the bftchain authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include "bftchain/app.hpp"
#include "bftchain/block.hpp"
#include "bftchain/execution.hpp"
#include "bftchain/records.hpp"
#include "bftchain/view.hpp"

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace bftchain
{

struct VerifyIssue
{
    std::int64_t block = -1; // -1 when not tied to a specific block
    std::string what;
    std::optional<std::size_t> offset; // byte offset for framing damage
};

struct VerifyReport
{
    // Highest block whose body, results, header, proof and (when required)
    // certificate all check out; 0 means only the genesis record verified.
    BlockNum lastComplete = 0;
    // No violations, no framing damage, and no trailing partial block.
    bool fullyValid = false;
    bool partialTrailing = false; // headerless records at the stream end
    std::vector<VerifyIssue> issues;
    std::optional<std::size_t> corruptOffset;
};

// Replays a ledger record stream against the trusted genesis block and
// checks, per block: record ordering, hash chaining, header/body hash
// consistency, decision-proof validity under the view in force, certificate
// validity (under the view installed by the block itself for
// reconfiguration blocks), recomputed execution results byte-for-byte, and
// recomputed successor views for reconfiguration blocks. The verifier
// tracks view changes through reconfiguration blocks so consensus keys only
// count for the block range their view was in force.
//
// Used by the standalone verify tool (full replay from genesis) and by
// joining/recovering replicas (optionally seeded with a snapshot, in which
// case blocks up to the snapshot's cover get structural checks only and
// execution resumes from the restored state).
class ChainVerifier
{
  public:
    ChainVerifier(GenesisBlock genesis, Application& app);

    // Must be called before verify(). Restores execution state as of
    // snapshot.lastBlockCovered; returns false on a payload/digest mismatch.
    bool seedSnapshot(Snapshot const& snapshot);

    VerifyReport verify(ByteSpan stream);

    // Invoked at every checkpoint boundary the verifier executes through,
    // letting a recovering replica rebuild the snapshot a continuously
    // running replica would hold.
    std::function<void(Snapshot const&)> onCheckpoint;

    // Adoption accessors, meaningful after verify().
    View const& currentView() const { return mView; }
    ExecutionState const& execState() const { return mExec; }
    crypto::Digest const& lastHash() const { return mLastHash; }
    std::int64_t lastReconfig() const { return mLastReconfig; }
    std::int64_t lastCheckpoint() const { return mLastCheckpoint; }
    std::map<BlockNum, crypto::Digest> const& headerHashes() const
    {
        return mHeaderHash;
    }
    std::set<BlockNum> const& certifiedBlocks() const { return mCertified; }
    KeyDirectory const& keys() const { return mKeys; }

  private:
    enum class Expect
    {
        GENESIS,
        BODY,
        RESULTS,
        HEADER,
    };

    void fail(std::int64_t block, std::string what);
    bool processRecord(Record const& rec);
    bool processGenesis(Record const& rec);
    bool processBody(Record const& rec);
    bool processResults(Record const& rec);
    bool processHeader(Record const& rec);
    bool processCert(Record const& rec);

    GenesisBlock mGenesis;
    Application& mApp;
    ExecutionState mExec;
    KeyDirectory mKeys;
    View mView;

    BlockNum mNext = 1; // block under assembly
    Expect mExpect = Expect::GENESIS;
    std::int64_t mLastReconfig = -1;
    std::int64_t mLastCheckpoint = -1;
    crypto::Digest mLastHash;
    BlockNum mSeedCover = 0; // blocks <= cover are not executed

    // Pending block parts between the body record and its header.
    std::optional<TxBatchPayload> mPendingBody;
    std::optional<View> mPendingView; // reconfiguration blocks only
    std::vector<TxResult> mPendingResults;

    std::map<BlockNum, crypto::Digest> mHeaderHash;
    std::map<BlockNum, ViewId> mCertView; // view a block's certificate uses
    std::set<BlockNum> mCertified;
    std::vector<VerifyIssue> mIssues;
    BlockNum mLastComplete = 0;
};

} // namespace bftchain
