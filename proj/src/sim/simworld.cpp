// Copyright 2026 the bftchain authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include "bftchain/sim/simworld.hpp"

#include "bftchain/chain_verifier.hpp"
#include "bftchain/records.hpp"

#include <algorithm>
#include <deque>
#include <sstream>

namespace bftchain::sim
{

namespace
{

crypto::PermanentKeypair
clonePermanent(crypto::PermanentKeypair const& k)
{
    crypto::PermanentKeypair out;
    out.owner = k.owner;
    out.publicKey = k.publicKey;
    out.secretKey = k.secretKey.clone();
    return out;
}

} // namespace

// --- replica process ---------------------------------------------------------

class SimWorld::ReplicaProc : public ReplicaEnv
{
  public:
    ReplicaProc(SimWorld& world, ReplicaId id) : mWorld(world), mId(id) {}

    SimWorld& mWorld;
    ReplicaId mId;
    ByzantineScript mScript = ByzantineScript::NONE;
    bool mAlive = false;
    std::uint64_t mEpoch = 0; // bumped on crash; stale events check it
    std::unique_ptr<ReplicaNode> mNode;

    // Disk model. `mFile` is what a running process reads back; only the
    // first `mDurableLen` bytes are guaranteed to survive a crash.
    Bytes mFile;
    std::size_t mDurableLen = 0;
    std::uint32_t mSyncSeq = 0;
    std::vector<std::pair<crypto::EndorsedKey, crypto::SecretKey>> mVault;
    bool mRetainVault = false;
    std::array<std::optional<std::pair<std::uint64_t, Snapshot>>, 2> mSlots;

    std::map<std::uint32_t, std::uint64_t> mTimerGen;
    std::uint64_t mDrawCounter = 0;

    BlockNum mHighestFinished = 0;
    bool mEverFinished = false;
    std::uint64_t mHaltCount = 0;

    // --- ReplicaEnv ---
    std::uint64_t
    nowUs() override
    {
        return mWorld.mNow;
    }

    std::array<std::uint8_t, 32>
    drawSeed() override
    {
        return mWorld.derivedSeed("consensus-seed", mId, ++mDrawCounter);
    }

    void
    sendMessage(ProcessId to, WireMessage msg) override
    {
        applyScriptAndSend(to, std::move(msg));
    }

    void
    armTimer(std::uint32_t token, std::uint64_t delayUs) override
    {
        auto gen = ++mTimerGen[token];
        auto epoch = mEpoch;
        mWorld.schedule(mWorld.mNow + delayUs, [this, token, gen, epoch] {
            if (!mAlive || mEpoch != epoch || mTimerGen[token] != gen ||
                !mNode)
            {
                return;
            }
            mNode->onTimer(token);
        });
    }

    void
    cancelTimer(std::uint32_t token) override
    {
        ++mTimerGen[token];
    }

    void
    defer(std::function<void()> task) override
    {
        auto epoch = mEpoch;
        mWorld.schedule(mWorld.mNow, [this, epoch, task = std::move(task)] {
            if (mAlive && mEpoch == epoch)
            {
                task();
            }
        });
    }

    void
    storageEnqueue(Record const& rec) override
    {
        auto frame = frameRecord(rec);
        mFile.insert(mFile.end(), frame.begin(), frame.end());
    }

    void
    storageRequestSync() override
    {
        ++mSyncSeq;
        auto epoch = mEpoch;
        auto completion = [this, epoch] {
            if (mAlive && mEpoch == epoch && mNode)
            {
                mNode->onStorageSynced();
            }
        };
        switch (mWorld.mConfig.persistence)
        {
        case PersistenceVariant::STRONG:
        {
            auto len = mFile.size();
            mWorld.schedule(mWorld.mNow + mWorld.mConfig.diskDelayUs,
                            [this, epoch, len, completion] {
                                if (!mAlive || mEpoch != epoch)
                                {
                                    return;
                                }
                                mDurableLen = std::max(
                                    mDurableLen, std::min(len, mFile.size()));
                                completion();
                            });
            return;
        }
        case PersistenceVariant::LAMBDA:
        {
            // Group flush: the barrier itself returns immediately; every
            // few barriers the accumulated records become durable.
            if (mSyncSeq % mWorld.mConfig.lambdaGroupSize == 0)
            {
                auto len = mFile.size();
                mWorld.schedule(mWorld.mNow + mWorld.mConfig.diskDelayUs,
                                [this, epoch, len] {
                                    if (mAlive && mEpoch == epoch)
                                    {
                                        mDurableLen = std::max(
                                            mDurableLen,
                                            std::min(len, mFile.size()));
                                    }
                                });
            }
            mWorld.schedule(mWorld.mNow + 1, completion);
            return;
        }
        case PersistenceVariant::WEAK:
        case PersistenceVariant::MEMORY:
            mWorld.schedule(mWorld.mNow + 1, completion);
            return;
        }
    }

    Bytes
    storageSyncedBytes() override
    {
        return mFile;
    }

    void
    storageTruncate(std::uint64_t keep) override
    {
        if (keep < mFile.size())
        {
            mFile.resize(keep);
        }
        mDurableLen = std::min<std::size_t>(mDurableLen, keep);
    }

    void
    snapshotWrite(std::uint64_t seq, Snapshot const& snap) override
    {
        mSlots[seq % 2] = std::make_pair(seq, snap);
    }

    std::optional<std::pair<std::uint64_t, Snapshot>>
    snapshotSlot(unsigned slot) override
    {
        return mSlots[slot % 2];
    }

    void
    vaultStore(crypto::EndorsedKey const& publicPart,
               crypto::SecretKey secret) override
    {
        for (auto& [pub, sec] : mVault)
        {
            if (pub.viewId == publicPart.viewId)
            {
                pub = publicPart;
                sec = std::move(secret);
                return;
            }
        }
        mVault.emplace_back(publicPart, std::move(secret));
    }

    void
    vaultEraseBelow(ViewId viewId) override
    {
        if (mRetainVault)
        {
            return; // the scripted adversary "forgets" nothing
        }
        std::erase_if(mVault, [viewId](auto const& entry) {
            return entry.first.viewId < viewId;
        });
    }

    std::vector<std::pair<crypto::EndorsedKey, crypto::SecretKey>>
    vaultLoad() override
    {
        std::vector<std::pair<crypto::EndorsedKey, crypto::SecretKey>> out;
        for (auto const& [pub, sec] : mVault)
        {
            out.emplace_back(pub, sec.clone());
        }
        return out;
    }

    std::vector<ProcessId>
    knownReplicas() override
    {
        std::vector<ProcessId> out;
        for (auto const& [rid, proc] : mWorld.mReplicas)
        {
            out.push_back(rid);
        }
        return out;
    }

    void
    logLine(std::string line) override
    {
        mWorld.traceLine("{\"t\":" + std::to_string(mWorld.mNow) +
                         ",\"replica\":" + std::to_string(mId) +
                         ",\"log\":\"" + line + "\"}");
    }

    void
    halt(std::string reason) override
    {
        ++mHaltCount;
        if (mWorld.mConfig.haltIsViolation)
        {
            mWorld.violation("replica " + std::to_string(mId) +
                             " halted: " + reason);
        }
        mWorld.traceLine("{\"t\":" + std::to_string(mWorld.mNow) +
                         ",\"replica\":" + std::to_string(mId) +
                         ",\"halt\":\"" + reason + "\"}");
    }

    // --- process lifecycle ---
    void
    buildNode(bool fresh)
    {
        ReplicaConfig rc;
        rc.self = mId;
        rc.genesis = mWorld.mGenesis;
        rc.engine = mWorld.mConfig.engine;
        rc.permanentKey = clonePermanent(mWorld.mReplicaKeys.at(mId));
        if (fresh)
        {
            rc.initialConsensusKey = crypto::ConsensusKeypair::fromSeed(
                rc.permanentKey, mWorld.mGenesis.initialView.id,
                mWorld.derivedSeed("genesis-consensus", mId, 0));
        }
        auto appConfig = mWorld.mAppConfig;
        rc.appFactory = [appConfig]() -> std::unique_ptr<Application> {
            return std::make_unique<coin::CoinApp>(appConfig);
        };
        rc.stRetryTimeoutUs = mWorld.mConfig.stRetryTimeoutUs;
        rc.membershipRetryTimeoutUs = mWorld.mConfig.membershipRetryTimeoutUs;
        mNode = std::make_unique<ReplicaNode>(std::move(rc), *this);
        mNode->onBlockFinished = [this](BlockNum block) {
            mEverFinished = true;
            mHighestFinished = std::max(mHighestFinished, block);
            mWorld.noteFinished(mId, block, mNode->core().lastBlockHash());
        };
        mNode->onMembership = [this](bool accepted, std::string detail) {
            mWorld.traceLine("{\"t\":" + std::to_string(mWorld.mNow) +
                             ",\"replica\":" + std::to_string(mId) +
                             ",\"membership\":" +
                             (accepted ? "true" : "false") + ",\"detail\":\"" +
                             detail + "\"}");
        };
    }

    void
    startWeakFlusher()
    {
        if (mWorld.mConfig.persistence != PersistenceVariant::WEAK)
        {
            return;
        }
        auto epoch = mEpoch;
        mWorld.schedule(mWorld.mNow + mWorld.mConfig.weakFlushIntervalUs,
                        [this, epoch] {
                            if (!mAlive || mEpoch != epoch)
                            {
                                return;
                            }
                            mDurableLen = mFile.size();
                            startWeakFlusher();
                        });
    }

    void
    crashNow()
    {
        if (!mAlive)
        {
            return;
        }
        mAlive = false;
        ++mEpoch;
        mNode.reset();
        // Bytes past the durable prefix may partially survive: the disk was
        // mid-write, so an arbitrary prefix of them is on the platter.
        if (mFile.size() > mDurableLen)
        {
            std::size_t keep = mDurableLen;
            auto excess = mFile.size() - mDurableLen;
            if (mWorld.chance(mWorld.mConfig.tornTailProbability))
            {
                keep += static_cast<std::size_t>(mWorld.mRng() %
                                                 (excess + 1));
            }
            mFile.resize(keep);
            mDurableLen = std::min(mDurableLen, mFile.size());
        }
        mWorld.traceLine("{\"t\":" + std::to_string(mWorld.mNow) +
                         ",\"replica\":" + std::to_string(mId) +
                         ",\"crash\":true}");
    }

    void
    recoverNow()
    {
        if (mAlive)
        {
            return;
        }
        mAlive = true;
        ++mEpoch;
        mTimerGen.clear();
        buildNode(false);
        startWeakFlusher();
        mWorld.traceLine("{\"t\":" + std::to_string(mWorld.mNow) +
                         ",\"replica\":" + std::to_string(mId) +
                         ",\"recover\":true}");
        mNode->start(StartMode::RECOVER);
    }

    std::vector<crypto::ConsensusKeypair>
    retainedKeys() const
    {
        std::vector<crypto::ConsensusKeypair> out;
        for (auto const& [pub, sec] : mVault)
        {
            out.push_back(
                crypto::ConsensusKeypair::fromParts(pub, sec.clone()));
        }
        return out;
    }

    void
    applyScriptAndSend(ProcessId to, WireMessage msg)
    {
        switch (mScript)
        {
        case ByzantineScript::NONE:
            break;
        case ByzantineScript::EQUIVOCATE_PROPOSE:
            if (msg.type == MsgType::PROPOSE && to % 2 == 0)
            {
                try
                {
                    auto m = parseBody<ProposeMsg>(msg);
                    // Same transactions, different identity: recipients
                    // split their votes between two batch hashes.
                    m.batch.assemblyTimeUs += 1;
                    msg.body = encodeToBytes(m);
                }
                catch (CodecError const&)
                {
                }
            }
            break;
        case ByzantineScript::WITHHOLD_VOTES:
            if (msg.type == MsgType::WRITE || msg.type == MsgType::ACCEPT ||
                msg.type == MsgType::PERSIST)
            {
                return;
            }
            break;
        case ByzantineScript::CORRUPT_STATE_TRANSFER:
            if (msg.type == MsgType::ST_REP)
            {
                try
                {
                    auto m = parseBody<StRepMsg>(msg);
                    if (m.kind == StRepKind::FULL)
                    {
                        if (!m.recordStream.empty())
                        {
                            m.recordStream[m.recordStream.size() / 2] ^= 0x01;
                        }
                        if (m.snapshot &&
                            !m.snapshot->statePayload.empty())
                        {
                            // Internally consistent but semantically wrong:
                            // only the digest cross-check can catch this.
                            m.snapshot->statePayload[0] ^= 0x01;
                            m.snapshot->stateDigest =
                                crypto::sha256(m.snapshot->statePayload);
                        }
                        msg.body = encodeToBytes(m);
                    }
                    else if (m.kind == StRepKind::DIGEST && m.snapshotDigest)
                    {
                        m.snapshotDigest->bytes[0] ^= 0x01;
                        msg.body = encodeToBytes(m);
                    }
                }
                catch (CodecError const&)
                {
                }
            }
            break;
        case ByzantineScript::RETAINED_KEY_FORK:
            if (msg.type == MsgType::ST_REP && mNode &&
                mNode->mode() == ReplicaMode::RETIRED)
            {
                try
                {
                    auto m = parseBody<StRepMsg>(msg);
                    if (m.kind == StRepKind::FULL)
                    {
                        auto keys = retainedKeys();
                        std::vector<crypto::ConsensusKeypair const*> ptrs;
                        for (auto const& k : keys)
                        {
                            ptrs.push_back(&k);
                        }
                        auto forged = SimWorld::forgeAlternativeTip(
                            mFile, mWorld.mGenesis, ptrs);
                        if (!forged.empty())
                        {
                            m.recordStream = std::move(forged);
                            m.snapshot.reset();
                            msg.body = encodeToBytes(m);
                        }
                    }
                }
                catch (CodecError const&)
                {
                }
            }
            break;
        }
        mWorld.routeSend(mId, to, std::move(msg));
    }
};

// --- client process ----------------------------------------------------------

class SimWorld::ClientProc : public ClientEnv
{
  public:
    ClientProc(SimWorld& world, ProcessId id, std::uint32_t index)
        : mWorld(world), mId(id), mIndex(index)
    {
        ClientConfig cc;
        cc.self = id;
        cc.genesis = mWorld.mGenesis;
        for (auto const& [rid, proc] : mWorld.mReplicas)
        {
            cc.replicas.push_back(rid);
        }
        cc.retryTimeoutUs = mWorld.mConfig.clientRetryUs;
        mSession = std::make_unique<ClientSession>(std::move(cc), *this);
        mSession->onCommitted = [this](ClientSession::Commit const& c) {
            onCommit(c);
        };
    }

    SimWorld& mWorld;
    ProcessId mId;
    std::uint32_t mIndex;
    std::unique_ptr<ClientSession> mSession;
    std::map<std::uint32_t, std::uint64_t> mTimerGen;

    std::uint32_t mMintsLeft = 0;
    bool mAlsoSpend = false;
    std::deque<std::pair<crypto::Digest, std::uint64_t>> mToSpend;
    bool mLastWasMint = false;
    ClientOutcome mOut;

    std::uint64_t
    nowUs() override
    {
        return mWorld.mNow;
    }

    void
    sendMessage(ProcessId to, WireMessage msg) override
    {
        mWorld.routeSend(mId, to, std::move(msg));
    }

    void
    armTimer(std::uint32_t token, std::uint64_t delayUs) override
    {
        auto gen = ++mTimerGen[token];
        mWorld.schedule(mWorld.mNow + delayUs, [this, token, gen] {
            if (mTimerGen[token] == gen)
            {
                mSession->onTimer(token);
            }
        });
    }

    void
    cancelTimer(std::uint32_t token) override
    {
        ++mTimerGen[token];
    }

    void
    pump()
    {
        if (!mSession->idle())
        {
            return;
        }
        auto const& key = mWorld.mClientKeys[mIndex];
        if (mMintsLeft > 0)
        {
            --mMintsLeft;
            mLastWasMint = true;
            auto tx = coin::makeCoinTransaction(
                mId, mSession->nextSequence(), key, coin::CoinOp::MINT, {},
                {coin::CoinOutput{key.publicKey, mWorld.mConfig.mintValue}});
            ++mOut.submitted;
            mSession->submitTransaction(std::move(tx));
            return;
        }
        if (mAlsoSpend && !mToSpend.empty())
        {
            auto [coinId, value] = mToSpend.front();
            mToSpend.pop_front();
            mLastWasMint = false;
            auto tx = coin::makeCoinTransaction(
                mId, mSession->nextSequence(), key, coin::CoinOp::SPEND,
                {coinId}, {coin::CoinOutput{key.publicKey, value}});
            ++mOut.submitted;
            mSession->submitTransaction(std::move(tx));
            return;
        }
        mOut.done = true;
    }

    void
    onCommit(ClientSession::Commit const& c)
    {
        ++mOut.committed;
        mWorld.mLatencies.push_back(c.latencyUs);
        try
        {
            auto result = decodeFromBytes<coin::CoinResult>(c.result);
            if (result.status == coin::CoinStatus::OK)
            {
                if (mLastWasMint)
                {
                    ++mOut.okMints;
                    if (!result.coinIds.empty())
                    {
                        mToSpend.emplace_back(result.coinIds.front(),
                                              mWorld.mConfig.mintValue);
                    }
                }
                else
                {
                    ++mOut.okSpends;
                }
            }
            else
            {
                ++mOut.rejected;
            }
        }
        catch (CodecError const&)
        {
            ++mOut.rejected;
        }
        pump();
    }
};

// --- world -------------------------------------------------------------------

SimWorld::SimWorld(SimConfig config) : mConfig(config), mRng(config.seed)
{
    crypto::initCrypto();

    for (std::uint32_t i = 1; i <= mConfig.replicas; ++i)
    {
        mReplicaKeys.emplace(i, crypto::PermanentKeypair::fromSeed(
                                    i, derivedSeed("perm-replica", i, 0)));
    }
    for (std::uint32_t i = 0; i < mConfig.clients; ++i)
    {
        mClientKeys.push_back(crypto::PermanentKeypair::fromSeed(
            CLIENT_BASE + i, derivedSeed("perm-client", i, 0)));
    }

    View initial;
    initial.id = 0;
    initial.f = View::maxFaulty(mConfig.replicas);
    for (std::uint32_t i = 1; i <= mConfig.replicas; ++i)
    {
        ViewMember m;
        m.id = i;
        m.permanentKey = mReplicaKeys.at(i).publicKey;
        m.consensusKey = crypto::ConsensusKeypair::fromSeed(
                             mReplicaKeys.at(i), 0,
                             derivedSeed("genesis-consensus", i, 0))
                             .endorsed();
        initial.members.push_back(std::move(m));
    }
    mGenesis.initialView = std::move(initial);
    mGenesis.checkpointPeriod = mConfig.checkpointPeriod;
    mGenesis.persistence = mConfig.persistence;
    mAppConfig.joinPolicy = mConfig.joinPolicy;
    for (auto const& k : mClientKeys)
    {
        mAppConfig.minters.push_back(k.publicKey);
    }
    mGenesis.appConfig = encodeToBytes(mAppConfig);

    for (std::uint32_t i = 1; i <= mConfig.replicas; ++i)
    {
        auto& proc = spawnReplica(i);
        proc.mAlive = true;
        proc.buildNode(true);
        proc.startWeakFlusher();
        proc.mNode->start(StartMode::FRESH);
    }
    for (std::uint32_t i = 0; i < mConfig.clients; ++i)
    {
        auto id = CLIENT_BASE + i;
        mClients.emplace(id, std::make_unique<ClientProc>(*this, id, i));
    }
}

SimWorld::~SimWorld() = default;

SimWorld::ReplicaProc&
SimWorld::spawnReplica(ReplicaId id)
{
    auto [it, fresh] =
        mReplicas.emplace(id, std::make_unique<ReplicaProc>(*this, id));
    return *it->second;
}

std::array<std::uint8_t, 32>
SimWorld::derivedSeed(std::string const& tag, std::uint64_t a,
                      std::uint64_t b)
{
    Encoder e;
    e.u64(mConfig.seed);
    e.str(tag);
    e.u64(a);
    e.u64(b);
    auto digest = crypto::sha256(e.data());
    return digest.bytes;
}

bool
SimWorld::chance(double p)
{
    if (p <= 0.0)
    {
        return false;
    }
    // 53-bit uniform draw; platform-stable unlike the distribution classes.
    auto draw = static_cast<double>(mRng() >> 11) * 0x1.0p-53;
    return draw < p;
}

void
SimWorld::schedule(std::uint64_t timeUs, std::function<void()> fn)
{
    mQueue.push(Event{timeUs, ++mEventSeq, std::move(fn)});
}

void
SimWorld::at(std::uint64_t timeUs, std::function<void()> fn)
{
    schedule(timeUs, std::move(fn));
}

std::uint64_t
SimWorld::drawNetDelay()
{
    auto const& l = mConfig.latency;
    auto lo = l.minDelayUs;
    auto hi = mNow < l.gstUs ? l.preGstMaxDelayUs : l.maxDelayUs;
    if (hi <= lo)
    {
        return lo;
    }
    return lo + mRng() % (hi - lo + 1);
}

void
SimWorld::routeSend(ProcessId from, ProcessId to, WireMessage msg)
{
    auto isolated = [&](ProcessId p) {
        auto it = mIsolated.find(p);
        return it != mIsolated.end() && it->second;
    };
    if (isolated(from) || isolated(to))
    {
        return;
    }
    auto delay = drawNetDelay();
    schedule(mNow + delay, [this, from, to, msg = std::move(msg)] {
        deliver(from, to, msg);
    });
}

void
SimWorld::deliver(ProcessId from, ProcessId to, WireMessage msg)
{
    (void)from;
    ++mDelivered;
    if (auto* replica = findReplica(to))
    {
        if (replica->mAlive && replica->mNode)
        {
            replica->mNode->onMessage(msg);
        }
        return;
    }
    if (auto* client = findClient(to))
    {
        client->mSession->onMessage(msg);
    }
}

SimWorld::ReplicaProc*
SimWorld::findReplica(ReplicaId id)
{
    auto it = mReplicas.find(id);
    return it == mReplicas.end() ? nullptr : it->second.get();
}

SimWorld::ReplicaProc const*
SimWorld::findReplica(ReplicaId id) const
{
    auto it = mReplicas.find(id);
    return it == mReplicas.end() ? nullptr : it->second.get();
}

SimWorld::ClientProc*
SimWorld::findClient(ProcessId id)
{
    auto it = mClients.find(id);
    return it == mClients.end() ? nullptr : it->second.get();
}

void
SimWorld::violation(std::string what)
{
    mViolations.push_back("t=" + std::to_string(mNow) + ": " + what);
}

void
SimWorld::traceLine(std::string const& line)
{
    if (mConfig.trace)
    {
        mTrace += line;
        mTrace += '\n';
    }
}

void
SimWorld::noteFinished(ReplicaId id, BlockNum block,
                       crypto::Digest const& hash)
{
    auto [it, fresh] = mFinishedHashes.emplace(block, std::make_pair(hash, id));
    if (!fresh && it->second.first != hash)
    {
        violation("fork: block " + std::to_string(block) + " finished as " +
                  it->second.first.hex().substr(0, 16) + " by replica " +
                  std::to_string(it->second.second) + " but as " +
                  hash.hex().substr(0, 16) + " by replica " +
                  std::to_string(id));
    }
}

void
SimWorld::crash(ReplicaId id)
{
    if (auto* proc = findReplica(id))
    {
        proc->crashNow();
    }
}

void
SimWorld::recover(ReplicaId id)
{
    if (auto* proc = findReplica(id))
    {
        proc->recoverNow();
    }
}

void
SimWorld::fullStop()
{
    for (auto& [id, proc] : mReplicas)
    {
        proc->crashNow();
    }
}

void
SimWorld::corruptOwnStorage(ReplicaId id)
{
    auto* proc = findReplica(id);
    if (!proc || proc->mFile.empty())
    {
        return;
    }
    auto pos = static_cast<std::size_t>(mRng() % proc->mFile.size());
    proc->mFile[pos] ^= 0x01;
    traceLine("{\"t\":" + std::to_string(mNow) + ",\"replica\":" +
              std::to_string(id) + ",\"corruptByte\":" +
              std::to_string(pos) + "}");
}

void
SimWorld::setByzantine(ReplicaId id, ByzantineScript script)
{
    if (auto* proc = findReplica(id))
    {
        proc->mScript = script;
        proc->mRetainVault = script == ByzantineScript::RETAINED_KEY_FORK;
    }
}

void
SimWorld::isolate(ProcessId id, bool cut)
{
    mIsolated[id] = cut;
}

void
SimWorld::beginJoin(ReplicaId newId)
{
    if (mReplicas.count(newId))
    {
        violation("beginJoin: replica id already in use");
        return;
    }
    mReplicaKeys.emplace(newId, crypto::PermanentKeypair::fromSeed(
                                    newId,
                                    derivedSeed("perm-replica", newId, 0)));
    std::optional<JoinHint> hint;
    for (auto const& [rid, proc] : mReplicas)
    {
        if (proc->mAlive && proc->mNode &&
            proc->mNode->mode() == ReplicaMode::ACTIVE)
        {
            auto const& view = proc->mNode->core().currentView();
            hint = JoinHint{view.id, view.n(), view.f};
            break;
        }
    }
    if (!hint)
    {
        violation("beginJoin: no active replica to learn the view from");
        return;
    }
    auto& proc = spawnReplica(newId);
    proc.mAlive = true;
    proc.buildNode(false);
    proc.startWeakFlusher();
    proc.mNode->start(StartMode::JOIN, hint);
}

void
SimWorld::beginLeave(ReplicaId id)
{
    if (auto* proc = findReplica(id); proc && proc->mAlive && proc->mNode)
    {
        proc->mNode->requestLeave();
    }
}

void
SimWorld::castRemoveVotes(ReplicaId target)
{
    for (auto& [id, proc] : mReplicas)
    {
        if (id != target && proc->mAlive && proc->mNode &&
            proc->mNode->mode() == ReplicaMode::ACTIVE)
        {
            proc->mNode->voteRemove(target);
        }
    }
}

void
SimWorld::clientLoad(std::uint32_t clientIndex, std::uint32_t mints,
                     bool alsoSpend)
{
    auto* client = findClient(CLIENT_BASE + clientIndex);
    if (!client)
    {
        return;
    }
    client->mMintsLeft += mints;
    client->mAlsoSpend = alsoSpend;
    client->mOut.done = false;
    client->pump();
}

ReplicaNode*
SimWorld::node(ReplicaId id)
{
    auto* proc = findReplica(id);
    return proc && proc->mAlive ? proc->mNode.get() : nullptr;
}

ClientSession*
SimWorld::client(std::uint32_t clientIndex)
{
    auto* proc = findClient(CLIENT_BASE + clientIndex);
    return proc ? proc->mSession.get() : nullptr;
}

bool
SimWorld::running(ReplicaId id) const
{
    auto const* proc = findReplica(id);
    return proc && proc->mAlive;
}

Bytes
SimWorld::ledgerBytes(ReplicaId id) const
{
    auto const* proc = findReplica(id);
    return proc ? proc->mFile : Bytes{};
}

Bytes
SimWorld::durableLedgerBytes(ReplicaId id) const
{
    auto const* proc = findReplica(id);
    if (!proc)
    {
        return {};
    }
    return Bytes(proc->mFile.begin(), proc->mFile.begin() + proc->mDurableLen);
}

crypto::PermanentKeypair const&
SimWorld::clientKey(std::uint32_t clientIndex) const
{
    return mClientKeys.at(clientIndex);
}

crypto::PermanentKeypair const&
SimWorld::replicaKey(ReplicaId id) const
{
    return mReplicaKeys.at(id);
}

SimResult
SimWorld::run(std::uint64_t untilUs)
{
    while (!mQueue.empty() && mQueue.top().timeUs <= untilUs)
    {
        auto ev = mQueue.top();
        mQueue.pop();
        mNow = ev.timeUs;
        ev.fn();
    }
    mNow = untilUs;

    SimResult result;
    result.endTimeUs = mNow;
    result.deliveredMessages = mDelivered;
    result.commitLatenciesUs = mLatencies;
    for (auto& [id, proc] : mReplicas)
    {
        ReplicaOutcome out;
        out.exists = true;
        out.running = proc->mAlive;
        out.mode = proc->mAlive && proc->mNode ? proc->mNode->mode()
                                               : ReplicaMode::OFFLINE;
        out.highestFinished = proc->mHighestFinished;
        out.everFinished = proc->mEverFinished;
        out.haltCount = proc->mHaltCount;
        coin::CoinApp checker(mAppConfig);
        ChainVerifier verifier(mGenesis, checker);
        auto report = verifier.verify(proc->mFile);
        out.ledgerFullyValid = report.fullyValid;
        out.ledgerLastComplete =
            static_cast<std::int64_t>(report.lastComplete);
        if (proc->mAlive && proc->mNode)
        {
            out.stateDigest = proc->mNode->stateDigest();
        }
        result.replicas.emplace(id, std::move(out));
    }
    for (auto& [id, client] : mClients)
    {
        client->mOut.retransmits = client->mSession->retransmits();
        result.clients.emplace(id, client->mOut);
        result.committedOps += client->mOut.committed;
    }
    result.violations = mViolations;
    return result;
}

// --- retained-key forgery -----------------------------------------------------

Bytes
SimWorld::forgeAlternativeTip(
    Bytes const& ledger, GenesisBlock const& genesis,
    std::vector<crypto::ConsensusKeypair const*> const& keys)
{
    auto scan = scanRecords(ledger);
    if (scan.records.empty())
    {
        return {};
    }
    // Locate the last block that closed with a plain transaction batch.
    std::optional<std::size_t> headerIdx;
    for (std::size_t i = scan.records.size(); i-- > 0;)
    {
        if (scan.records[i].type == RecordType::HEADER)
        {
            headerIdx = i;
            break;
        }
    }
    if (!headerIdx)
    {
        return {};
    }
    auto block = scan.records[*headerIdx].block;
    std::optional<Record> body;
    std::optional<Record> results;
    for (auto const& rec : scan.records)
    {
        if (rec.block != block)
        {
            continue;
        }
        if (rec.type == RecordType::TXBATCH)
        {
            body = rec;
        }
        else if (rec.type == RecordType::RESULTS)
        {
            results = rec;
        }
    }
    if (!body || !results)
    {
        return {}; // reconfiguration tip or incomplete block: leave it alone
    }

    // View in force at that block: count the reconfigurations before it.
    ViewId viewId = genesis.initialView.id;
    for (auto const& rec : scan.records)
    {
        if (rec.type == RecordType::RECONFIG_TXBATCH && rec.block < block)
        {
            ++viewId;
        }
    }

    TxBatchPayload payload;
    BlockHeader header;
    try
    {
        payload = decodeFromBytes<TxBatchPayload>(body->payload);
        header = decodeFromBytes<BlockHeader>(
            scan.records[*headerIdx].payload);
    }
    catch (CodecError const&)
    {
        return {};
    }

    payload.batch.assemblyTimeUs += 1; // same content, different identity
    auto batchHash = payload.batch.digest();
    payload.proof.instance = block;
    payload.proof.batchHash = batchHash;
    payload.proof.votes.clear();
    for (auto const* key : keys)
    {
        if (key->endorsed().viewId != viewId || key->forgotten())
        {
            continue;
        }
        SignedVote vote;
        vote.voter = key->endorsed().owner;
        vote.signature =
            key->sign(acceptVoteDigest(viewId, block, batchHash));
        payload.proof.votes.push_back(std::move(vote));
    }
    header.txBatchHash =
        txBatchDigest(payload.batch.transactions, payload.proof);
    auto headerHash = header.digest();
    Certificate cert;
    cert.block = block;
    for (auto const* key : keys)
    {
        if (key->endorsed().viewId != viewId || key->forgotten())
        {
            continue;
        }
        SignedVote vote;
        vote.voter = key->endorsed().owner;
        vote.signature = key->sign(headerHash);
        cert.votes.push_back(std::move(vote));
    }

    Bytes out;
    auto append = [&out](Record const& rec) {
        auto frame = frameRecord(rec);
        out.insert(out.end(), frame.begin(), frame.end());
    };
    for (auto const& rec : scan.records)
    {
        if (rec.block == block &&
            (rec.type == RecordType::TXBATCH ||
             rec.type == RecordType::RESULTS ||
             rec.type == RecordType::HEADER ||
             rec.type == RecordType::CERT))
        {
            continue;
        }
        append(rec);
    }
    append(Record{RecordType::TXBATCH, block, encodeToBytes(payload)});
    append(*results);
    append(Record{RecordType::HEADER, block, encodeToBytes(header)});
    append(Record{RecordType::CERT, block, encodeToBytes(cert)});
    return out;
}

} // namespace bftchain::sim
