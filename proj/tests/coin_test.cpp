// Copyright 2026 the bftchain authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include "bftchain/coin.hpp"

#include "doctest.h"

using namespace bftchain;
using namespace bftchain::coin;

namespace
{

crypto::PermanentKeypair
clientKey(std::uint8_t tag)
{
    crypto::initCrypto();
    std::array<std::uint8_t, 32> seed{};
    seed.fill(tag);
    return crypto::PermanentKeypair::fromSeed(1000 + tag, seed);
}

struct Fixture
{
    crypto::PermanentKeypair minter = clientKey(1);
    crypto::PermanentKeypair other = clientKey(2);
    CoinApp app;

    Fixture() : app(makeConfig())
    {
    }

    AppConfig
    makeConfig()
    {
        crypto::initCrypto();
        AppConfig cfg;
        cfg.minters.push_back(clientKey(1).publicKey);
        return cfg;
    }

    CoinResult
    run(Transaction const& tx, BlockNum block, std::uint32_t position)
    {
        auto bytes = app.execute(tx, ExecContext{block, position});
        return decodeFromBytes<CoinResult>(bytes);
    }
};

} // namespace

TEST_CASE("coin identity is derived from its chain coordinates")
{
    crypto::initCrypto();
    // Oracle: the id must be a pure function of (block, position, output),
    // distinct across each coordinate.
    auto base = coinId(5, 2, 0);
    CHECK(base == coinId(5, 2, 0));
    CHECK_FALSE(base == coinId(6, 2, 0));
    CHECK_FALSE(base == coinId(5, 3, 0));
    CHECK_FALSE(base == coinId(5, 2, 1));

    // Frozen derivation: sha256 of the tagged canonical coordinates.
    Encoder e;
    e.str("coin");
    e.u64(5);
    e.u32(2);
    e.u32(0);
    CHECK(base == crypto::sha256(e.data()));
}

TEST_CASE("transactions and results hit their byte profiles")
{
    Fixture fx;
    auto mint = makeCoinTransaction(
        7, 1, fx.minter, CoinOp::MINT, {},
        {CoinOutput{fx.minter.publicKey, 100}});
    CHECK(mint.payload.size() == MINT_TX_TARGET_BYTES);

    auto mintResult = fx.app.execute(mint, ExecContext{1, 0});
    CHECK(mintResult.size() == MINT_RESULT_TARGET_BYTES);
    auto decoded = decodeFromBytes<CoinResult>(mintResult);
    REQUIRE(decoded.status == CoinStatus::OK);
    REQUIRE(decoded.coinIds.size() == 1);

    auto spend = makeCoinTransaction(
        7, 2, fx.minter, CoinOp::SPEND, {decoded.coinIds[0]},
        {CoinOutput{fx.other.publicKey, 100}});
    CHECK(spend.payload.size() == SPEND_TX_TARGET_BYTES);
    auto spendResult = fx.app.execute(spend, ExecContext{2, 0});
    CHECK(spendResult.size() == SPEND_RESULT_TARGET_BYTES);
    CHECK(decodeFromBytes<CoinResult>(spendResult).status == CoinStatus::OK);
}

TEST_CASE("minting requires an authorized issuer")
{
    Fixture fx;
    auto tx = makeCoinTransaction(7, 1, fx.other, CoinOp::MINT, {},
                                  {CoinOutput{fx.other.publicKey, 50}});
    auto result = fx.run(tx, 1, 0);
    CHECK(result.status == CoinStatus::REJECT_NOT_MINTER);
    CHECK(fx.app.utxoCount() == 0);
}

TEST_CASE("mint and spend conserve total value")
{
    Fixture fx;
    auto mint = makeCoinTransaction(7, 1, fx.minter, CoinOp::MINT, {},
                                    {CoinOutput{fx.minter.publicKey, 100}});
    auto minted = fx.run(mint, 1, 0);
    REQUIRE(minted.status == CoinStatus::OK);
    CHECK(fx.app.totalValue() == 100);
    CHECK(fx.app.utxoCount() == 1);
    CHECK(minted.coinIds[0] == coinId(1, 0, 0));

    SUBCASE("split across two recipients")
    {
        auto spend = makeCoinTransaction(
            7, 2, fx.minter, CoinOp::SPEND, {minted.coinIds[0]},
            {CoinOutput{fx.other.publicKey, 60},
             CoinOutput{fx.minter.publicKey, 40}});
        auto spent = fx.run(spend, 2, 0);
        REQUIRE(spent.status == CoinStatus::OK);
        CHECK(spent.coinIds.size() == 2);
        CHECK(fx.app.totalValue() == 100);
        CHECK(fx.app.utxoCount() == 2);
    }
    SUBCASE("outputs must add up to the inputs")
    {
        auto spend = makeCoinTransaction(
            7, 2, fx.minter, CoinOp::SPEND, {minted.coinIds[0]},
            {CoinOutput{fx.other.publicKey, 99}});
        CHECK(fx.run(spend, 2, 0).status == CoinStatus::REJECT_VALUE_MISMATCH);
        CHECK(fx.app.utxoCount() == 1); // rejected spend burns nothing
    }
}

TEST_CASE("a coin spends exactly once")
{
    Fixture fx;
    auto mint = makeCoinTransaction(7, 1, fx.minter, CoinOp::MINT, {},
                                    {CoinOutput{fx.minter.publicKey, 10}});
    auto minted = fx.run(mint, 1, 0);
    REQUIRE(minted.status == CoinStatus::OK);

    auto spend1 = makeCoinTransaction(7, 2, fx.minter, CoinOp::SPEND,
                                      {minted.coinIds[0]},
                                      {CoinOutput{fx.other.publicKey, 10}});
    CHECK(fx.run(spend1, 2, 0).status == CoinStatus::OK);

    auto spend2 = makeCoinTransaction(7, 3, fx.minter, CoinOp::SPEND,
                                      {minted.coinIds[0]},
                                      {CoinOutput{fx.minter.publicKey, 10}});
    CHECK(fx.run(spend2, 2, 1).status == CoinStatus::REJECT_MISSING_INPUT);
    CHECK(fx.app.totalValue() == 10);
}

TEST_CASE("only the owner may spend a coin")
{
    Fixture fx;
    auto mint = makeCoinTransaction(7, 1, fx.minter, CoinOp::MINT, {},
                                    {CoinOutput{fx.minter.publicKey, 10}});
    auto minted = fx.run(mint, 1, 0);

    // The thief signs correctly with its own key, but does not own the coin.
    auto theft = makeCoinTransaction(8, 1, fx.other, CoinOp::SPEND,
                                     {minted.coinIds[0]},
                                     {CoinOutput{fx.other.publicKey, 10}});
    CHECK(fx.run(theft, 2, 0).status == CoinStatus::REJECT_NOT_OWNER);
}

TEST_CASE("a forged signature is rejected before any state change")
{
    Fixture fx;
    auto tx = makeCoinTransaction(7, 1, fx.minter, CoinOp::MINT, {},
                                  {CoinOutput{fx.minter.publicKey, 10}});
    // Tamper with the amount after signing.
    auto req = decodeFromBytes<CoinRequest>(tx.payload);
    req.outputs[0].value = 10000;
    tx.payload = encodeToBytes(req);
    CHECK(fx.run(tx, 1, 0).status == CoinStatus::REJECT_BAD_SIGNATURE);

    SUBCASE("padding is covered by the signature too")
    {
        auto tx2 = makeCoinTransaction(7, 1, fx.minter, CoinOp::MINT, {},
                                       {CoinOutput{fx.minter.publicKey, 10}});
        auto req2 = decodeFromBytes<CoinRequest>(tx2.payload);
        REQUIRE(!req2.padding.empty());
        req2.padding[0] ^= 1;
        tx2.payload = encodeToBytes(req2);
        CHECK(fx.run(tx2, 1, 0).status == CoinStatus::REJECT_BAD_SIGNATURE);
    }
    SUBCASE("the signature binds the client and sequence envelope")
    {
        auto tx3 = makeCoinTransaction(7, 1, fx.minter, CoinOp::MINT, {},
                                       {CoinOutput{fx.minter.publicKey, 10}});
        tx3.sequence = 2; // replay under a different sequence
        CHECK(fx.run(tx3, 1, 0).status == CoinStatus::REJECT_BAD_SIGNATURE);
    }
}

TEST_CASE("malformed structures are rejected deterministically")
{
    Fixture fx;

    SUBCASE("mint with inputs")
    {
        auto tx = makeCoinTransaction(7, 1, fx.minter, CoinOp::MINT,
                                      {coinId(1, 0, 0)},
                                      {CoinOutput{fx.minter.publicKey, 10}});
        CHECK(fx.run(tx, 1, 0).status == CoinStatus::REJECT_MALFORMED);
    }
    SUBCASE("no outputs")
    {
        auto tx = makeCoinTransaction(7, 1, fx.minter, CoinOp::MINT, {}, {});
        CHECK(fx.run(tx, 1, 0).status == CoinStatus::REJECT_NO_OUTPUTS);
    }
    SUBCASE("duplicate spend inputs in one request")
    {
        auto mint = makeCoinTransaction(
            7, 1, fx.minter, CoinOp::MINT, {},
            {CoinOutput{fx.minter.publicKey, 20}});
        auto minted = fx.run(mint, 1, 0);
        auto tx = makeCoinTransaction(
            7, 2, fx.minter, CoinOp::SPEND,
            {minted.coinIds[0], minted.coinIds[0]},
            {CoinOutput{fx.other.publicKey, 40}});
        CHECK(fx.run(tx, 2, 0).status == CoinStatus::REJECT_DUPLICATE_INPUT);
    }
    SUBCASE("undecodable payload")
    {
        Transaction tx;
        tx.client = 7;
        tx.sequence = 1;
        tx.kind = TxKind::APPLICATION;
        tx.payload = Bytes{0xff, 0xfe};
        CHECK(fx.run(tx, 1, 0).status == CoinStatus::REJECT_MALFORMED);
    }
}

TEST_CASE("conflicting spends in one batch resolve by position")
{
    Fixture fx;
    auto mint = makeCoinTransaction(7, 1, fx.minter, CoinOp::MINT, {},
                                    {CoinOutput{fx.minter.publicKey, 10}});
    auto minted = fx.run(mint, 1, 0);

    // Two clients race for the same coin inside block 2; the earlier
    // position wins, the later sees the input gone. Ownership checks make
    // this artificial (same owner signs both), which is exactly the race.
    auto a = makeCoinTransaction(7, 2, fx.minter, CoinOp::SPEND,
                                 {minted.coinIds[0]},
                                 {CoinOutput{fx.other.publicKey, 10}});
    auto b = makeCoinTransaction(7, 3, fx.minter, CoinOp::SPEND,
                                 {minted.coinIds[0]},
                                 {CoinOutput{fx.minter.publicKey, 10}});
    CHECK(fx.run(a, 2, 0).status == CoinStatus::OK);
    CHECK(fx.run(b, 2, 1).status == CoinStatus::REJECT_MISSING_INPUT);
}

TEST_CASE("snapshot state round-trips exactly")
{
    Fixture fx;
    for (std::uint64_t s = 1; s <= 5; ++s)
    {
        auto mint =
            makeCoinTransaction(7, s, fx.minter, CoinOp::MINT, {},
                                {CoinOutput{fx.minter.publicKey, s * 10}});
        REQUIRE(fx.run(mint, s, 0).status == CoinStatus::OK);
    }
    auto digest = fx.app.stateDigest();
    auto state = fx.app.snapshotState();

    CoinApp restored(fx.app.config());
    restored.restoreState(state);
    CHECK(restored.stateDigest() == digest);
    CHECK(restored.totalValue() == fx.app.totalValue());
    CHECK(restored.utxoCount() == 5);
    CHECK(restored.utxos() == fx.app.utxos());
}

TEST_CASE("duplicate recipients get distinct coins")
{
    Fixture fx;
    auto mint = makeCoinTransaction(
        7, 1, fx.minter, CoinOp::MINT, {},
        {CoinOutput{fx.minter.publicKey, 5},
         CoinOutput{fx.minter.publicKey, 5}});
    auto minted = fx.run(mint, 1, 0);
    REQUIRE(minted.status == CoinStatus::OK);
    REQUIRE(minted.coinIds.size() == 2);
    CHECK_FALSE(minted.coinIds[0] == minted.coinIds[1]);
    CHECK(fx.app.utxoCount() == 2);
}
