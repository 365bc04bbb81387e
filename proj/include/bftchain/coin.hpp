// Copyright 2026 the bftchain authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include "bftchain/app.hpp"
#include "bftchain/app_config.hpp"
#include "bftchain/crypto.hpp"

#include <map>

namespace bftchain::coin
{

enum class CoinOp : std::uint8_t
{
    MINT = 0,
    SPEND = 1,
};

struct CoinOutput
{
    crypto::PublicKey owner;
    std::uint64_t value = 0;

    auto operator<=>(CoinOutput const&) const = default;

    void
    encodeTo(Encoder& e) const
    {
        e.obj(owner);
        e.u64(value);
    }

    static CoinOutput
    decodeFrom(Decoder& d)
    {
        CoinOutput o;
        o.owner = d.obj<crypto::PublicKey>();
        o.value = d.u64();
        return o;
    }
};

// Application payload of a coin transaction. The issuer signature covers the
// enclosing envelope's (client, sequence) plus every payload field including
// the padding, so replays and padding tampering are both detectable.
//
// Requests are padded to the measured workload byte profile: a serialized
// single-output MINT transaction is 180 bytes and a single-input
// single-output SPEND is 310 bytes.
struct CoinRequest
{
    CoinOp op = CoinOp::MINT;
    crypto::PublicKey issuer;
    std::vector<crypto::Digest> inputs; // empty for MINT
    std::vector<CoinOutput> outputs;
    Bytes padding;
    crypto::Signature signature;

    void
    encodeTo(Encoder& e) const
    {
        e.u8(static_cast<std::uint8_t>(op));
        e.obj(issuer);
        e.list(inputs);
        e.list(outputs);
        e.bytes(padding);
        e.obj(signature);
    }

    static CoinRequest
    decodeFrom(Decoder& d)
    {
        CoinRequest r;
        auto op = d.u8();
        if (op > 1)
        {
            throw CodecError("unknown coin operation");
        }
        r.op = static_cast<CoinOp>(op);
        r.issuer = d.obj<crypto::PublicKey>();
        r.inputs = d.list<crypto::Digest>();
        r.outputs = d.list<CoinOutput>();
        r.padding = d.bytes();
        r.signature = d.obj<crypto::Signature>();
        return r;
    }

    crypto::Digest signingDigest(ClientId client,
                                 std::uint64_t sequence) const;
};

// Serialized-transaction size targets (see CoinRequest doc comment).
constexpr std::size_t MINT_TX_TARGET_BYTES = 180;
constexpr std::size_t SPEND_TX_TARGET_BYTES = 310;
// Result payloads are padded so replies approximate the same profile
// (roughly 270-byte MINT replies and 380-byte SPEND replies on the wire).
constexpr std::size_t MINT_RESULT_TARGET_BYTES = 216;
constexpr std::size_t SPEND_RESULT_TARGET_BYTES = 326;

// Builds a fully signed coin transaction padded to the byte profile.
Transaction makeCoinTransaction(ClientId client, std::uint64_t sequence,
                                crypto::PermanentKeypair const& issuer,
                                CoinOp op,
                                std::vector<crypto::Digest> inputs,
                                std::vector<CoinOutput> outputs);

enum class CoinStatus : std::uint8_t
{
    OK = 0,
    REJECT_MALFORMED = 1,
    REJECT_BAD_SIGNATURE = 2,
    REJECT_NOT_MINTER = 3,
    REJECT_MISSING_INPUT = 4,
    REJECT_NOT_OWNER = 5,
    REJECT_VALUE_MISMATCH = 6,
    REJECT_NO_OUTPUTS = 7,
    REJECT_DUPLICATE_INPUT = 8,
};

char const* nameOf(CoinStatus s);

struct CoinResult
{
    CoinStatus status = CoinStatus::OK;
    std::vector<crypto::Digest> coinIds; // created coins, output order
    Bytes padding;

    void
    encodeTo(Encoder& e) const
    {
        e.u8(static_cast<std::uint8_t>(status));
        e.list(coinIds);
        e.bytes(padding);
    }

    static CoinResult
    decodeFrom(Decoder& d)
    {
        CoinResult r;
        r.status = static_cast<CoinStatus>(d.u8());
        r.coinIds = d.list<crypto::Digest>();
        r.padding = d.bytes();
        return r;
    }
};

crypto::Digest coinId(BlockNum block, std::uint32_t position,
                      std::uint32_t outputIndex);

// Deterministic UTXO ledger application. All rejections are recorded results;
// execute() never throws on untrusted input.
class CoinApp : public Application
{
  public:
    explicit CoinApp(AppConfig config);

    bool validate(Transaction const& tx) const override;
    Bytes execute(Transaction const& tx, ExecContext const& ctx) override;

    Bytes snapshotState() const override;
    void restoreState(ByteSpan state) override;
    crypto::Digest stateDigest() const override;

    // Test and audit hooks.
    std::uint64_t totalValue() const;
    std::size_t utxoCount() const;
    std::map<crypto::Digest, CoinOutput> const&
    utxos() const
    {
        return mUtxos;
    }
    AppConfig const&
    config() const
    {
        return mConfig;
    }

  private:
    CoinResult apply(CoinRequest const& req, Transaction const& tx,
                     ExecContext const& ctx);

    AppConfig mConfig;
    std::map<crypto::Digest, CoinOutput> mUtxos; // ordered: digest canonical
};

} // namespace bftchain::coin
