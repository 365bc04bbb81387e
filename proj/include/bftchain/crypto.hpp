// Copyright 2026 the bftchain authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include "bftchain/codec.hpp"
#include "bftchain/types.hpp"

#include <array>
#include <compare>
#include <cstring>
#include <stdexcept>

namespace bftchain::crypto
{

void initCrypto(); // idempotent; safe to call from every entry point

template <std::size_t N, typename Tag> struct FixedBytes
{
    std::array<std::uint8_t, N> bytes{};

    auto operator<=>(FixedBytes const&) const = default;

    ByteSpan
    span() const
    {
        return ByteSpan(bytes.data(), bytes.size());
    }

    std::string
    hex() const
    {
        return toHex(span());
    }

    static FixedBytes
    fromSpan(ByteSpan data)
    {
        if (data.size() != N)
        {
            throw CodecError("fixed byte field has wrong length");
        }
        FixedBytes out;
        std::memcpy(out.bytes.data(), data.data(), N);
        return out;
    }

    void
    encodeTo(Encoder& e) const
    {
        e.raw(span());
    }

    static FixedBytes
    decodeFrom(Decoder& d)
    {
        return fromSpan(d.raw(N));
    }
};

using Digest = FixedBytes<32, struct DigestTag>;
using PublicKey = FixedBytes<32, struct PublicKeyTag>;
using Signature = FixedBytes<64, struct SignatureTag>;

// SHA-256. Incremental interface so large ledger files can be digested
// without buffering.
class Hasher
{
  public:
    Hasher();
    void update(ByteSpan data);
    Digest finish();

  private:
    std::array<std::uint8_t, 128> mState; // opaque libsodium state storage
    bool mDone = false;
};

Digest sha256(ByteSpan data);

// hash of the empty byte string; predecessor hash of the first block.
Digest emptyDigest();

// Secret key material that is wiped from memory when released. "Forgetting"
// a key is the security primitive the whole fork-prevention story rests on,
// so destruction must actually zeroize.
class SecretKey
{
  public:
    static constexpr std::size_t SIZE = 64;

    SecretKey() = default;
    ~SecretKey();
    SecretKey(SecretKey&& other) noexcept;
    SecretKey& operator=(SecretKey&& other) noexcept;
    SecretKey(SecretKey const&) = delete;
    SecretKey& operator=(SecretKey const&) = delete;

    static SecretKey fromSpan(ByteSpan data);

    bool
    empty() const
    {
        return !mPresent;
    }

    void wipe();

    ByteSpan
    span() const
    {
        return ByteSpan(mBytes.data(), mBytes.size());
    }

    SecretKey clone() const;

  private:
    friend struct KeypairOps;
    std::array<std::uint8_t, SIZE> mBytes{};
    bool mPresent = false;
};

class KeyForgottenError : public std::runtime_error
{
  public:
    KeyForgottenError() : std::runtime_error("signing key has been forgotten")
    {
    }
};

Signature sign(SecretKey const& key, Digest const& message);
bool verify(PublicKey const& key, Digest const& message, Signature const& sig);

// Long-lived identity key of a replica, client, or join candidate. Never
// rotated; registered in genesis or in the reconfiguration block that admits
// its owner.
struct PermanentKeypair
{
    ProcessId owner = 0;
    PublicKey publicKey;
    SecretKey secretKey;

    static PermanentKeypair generate(ProcessId owner);
    // Deterministic variant for seeded simulation runs.
    static PermanentKeypair fromSeed(ProcessId owner,
                                     std::array<std::uint8_t, 32> const& seed);

    Signature
    sign(Digest const& message) const
    {
        return crypto::sign(secretKey, message);
    }
};

// The statement a permanent key signs to endorse a per-view consensus key.
Digest endorsementDigest(ProcessId owner, ViewId viewId, PublicKey const& key);

// Public half of a consensus key together with the permanent-key endorsement
// that binds it to (owner, view).
struct EndorsedKey
{
    ProcessId owner = 0;
    ViewId viewId = 0;
    PublicKey publicKey;
    Signature endorsement;

    bool endorsementValidUnder(PublicKey const& permanentKey) const;

    auto operator<=>(EndorsedKey const&) const = default;

    void
    encodeTo(Encoder& e) const
    {
        e.u32(owner);
        e.u64(viewId);
        e.obj(publicKey);
        e.obj(endorsement);
    }

    static EndorsedKey
    decodeFrom(Decoder& d)
    {
        EndorsedKey k;
        k.owner = d.u32();
        k.viewId = d.u64();
        k.publicKey = d.obj<PublicKey>();
        k.endorsement = d.obj<Signature>();
        return k;
    }
};

// Per-view signing key. Signing after forget() throws; the secret bytes are
// zeroized in place, so even a later memory compromise of this process cannot
// recover them.
class ConsensusKeypair
{
  public:
    ConsensusKeypair() = default;

    static ConsensusKeypair generate(PermanentKeypair const& endorser,
                                     ViewId viewId);
    static ConsensusKeypair
    fromSeed(PermanentKeypair const& endorser, ViewId viewId,
             std::array<std::uint8_t, 32> const& seed);

    // Rebuild from persisted secret bytes (crash recovery).
    static ConsensusKeypair fromParts(EndorsedKey endorsed, SecretKey secret);

    EndorsedKey const&
    endorsed() const
    {
        return mEndorsed;
    }

    bool
    forgotten() const
    {
        return mForgotten;
    }

    // Idempotent: wipes the secret and marks the key unusable.
    void forget();

    Signature sign(Digest const& message) const;

    SecretKey const&
    secret() const
    {
        return mSecret;
    }

  private:
    EndorsedKey mEndorsed;
    SecretKey mSecret;
    bool mForgotten = true; // default-constructed object is unusable
};

} // namespace bftchain::crypto
