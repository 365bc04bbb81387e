// Copyright 2026 the bftchain authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include "bftchain/types.hpp"

#include <array>
#include <cstring>
#include <optional>
#include <stdexcept>

namespace bftchain
{

// Canonical serialization used everywhere bytes are hashed, signed, or laid
// down on disk: fields in declaration order, unsigned integers big-endian and
// fixed-width, byte strings length-prefixed (u32), no padding or alignment.
// Two encodings of the same value are bitwise identical by construction.

class CodecError : public std::runtime_error
{
  public:
    explicit CodecError(std::string const& what) : std::runtime_error(what)
    {
    }
};

class Encoder
{
  public:
    void
    u8(std::uint8_t v)
    {
        mBuf.push_back(v);
    }

    void
    u32(std::uint32_t v)
    {
        for (int shift = 24; shift >= 0; shift -= 8)
        {
            mBuf.push_back(static_cast<std::uint8_t>(v >> shift));
        }
    }

    void
    u64(std::uint64_t v)
    {
        for (int shift = 56; shift >= 0; shift -= 8)
        {
            mBuf.push_back(static_cast<std::uint8_t>(v >> shift));
        }
    }

    // Signed block bookkeeping fields (-1 sentinels) ride as two's complement.
    void
    i64(std::int64_t v)
    {
        u64(static_cast<std::uint64_t>(v));
    }

    void
    bytes(ByteSpan data)
    {
        if (data.size() > 0xffffffffu)
        {
            throw CodecError("byte string too long");
        }
        u32(static_cast<std::uint32_t>(data.size()));
        raw(data);
    }

    void
    raw(ByteSpan data)
    {
        mBuf.insert(mBuf.end(), data.begin(), data.end());
    }

    void
    str(std::string_view s)
    {
        bytes(ByteSpan(reinterpret_cast<std::uint8_t const*>(s.data()),
                       s.size()));
    }

    template <typename T>
    void
    obj(T const& v)
    {
        v.encodeTo(*this);
    }

    template <typename T>
    void
    list(std::vector<T> const& items)
    {
        if (items.size() > 0xffffffffu)
        {
            throw CodecError("list too long");
        }
        u32(static_cast<std::uint32_t>(items.size()));
        for (auto const& item : items)
        {
            obj(item);
        }
    }

    template <typename T>
    void
    opt(std::optional<T> const& v)
    {
        u8(v.has_value() ? 1 : 0);
        if (v.has_value())
        {
            obj(*v);
        }
    }

    Bytes const&
    data() const
    {
        return mBuf;
    }

    Bytes
    take()
    {
        return std::move(mBuf);
    }

  private:
    Bytes mBuf;
};

class Decoder
{
  public:
    explicit Decoder(ByteSpan data) : mIn(data)
    {
    }

    std::uint8_t
    u8()
    {
        need(1);
        return mIn[mPos++];
    }

    std::uint32_t
    u32()
    {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
        {
            v = (v << 8) | mIn[mPos++];
        }
        return v;
    }

    std::uint64_t
    u64()
    {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
        {
            v = (v << 8) | mIn[mPos++];
        }
        return v;
    }

    std::int64_t
    i64()
    {
        return static_cast<std::int64_t>(u64());
    }

    Bytes
    bytes()
    {
        auto n = u32();
        return raw(n);
    }

    Bytes
    raw(std::size_t n)
    {
        need(n);
        Bytes out(mIn.begin() + mPos, mIn.begin() + mPos + n);
        mPos += n;
        return out;
    }

    std::string
    str()
    {
        auto b = bytes();
        return std::string(b.begin(), b.end());
    }

    template <typename T>
    T
    obj()
    {
        return T::decodeFrom(*this);
    }

    template <typename T>
    std::vector<T>
    list()
    {
        auto n = u32();
        // Each element costs at least one byte; reject wild counts before
        // attempting to reserve.
        if (n > remaining())
        {
            throw CodecError("list count exceeds input");
        }
        std::vector<T> out;
        out.reserve(n);
        for (std::uint32_t i = 0; i < n; ++i)
        {
            out.push_back(obj<T>());
        }
        return out;
    }

    template <typename T>
    std::optional<T>
    opt()
    {
        auto flag = u8();
        if (flag == 0)
        {
            return std::nullopt;
        }
        if (flag != 1)
        {
            throw CodecError("bad optional flag");
        }
        return obj<T>();
    }

    bool
    done() const
    {
        return mPos == mIn.size();
    }

    std::size_t
    remaining() const
    {
        return mIn.size() - mPos;
    }

    void
    expectDone() const
    {
        if (!done())
        {
            throw CodecError("trailing bytes after decode");
        }
    }

  private:
    void
    need(std::size_t n) const
    {
        if (remaining() < n)
        {
            throw CodecError("input truncated");
        }
    }

    ByteSpan mIn;
    std::size_t mPos = 0;
};

template <typename T>
Bytes
encodeToBytes(T const& v)
{
    Encoder e;
    e.obj(v);
    return e.take();
}

template <typename T>
T
decodeFromBytes(ByteSpan data)
{
    Decoder d(data);
    T v = d.obj<T>();
    d.expectDone();
    return v;
}

} // namespace bftchain
