#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <unordered_map>

#include "sentinel/messages.hpp"

namespace sentinel {

using PublicKey = std::array<std::uint8_t, 32>;
using SecretKey = std::array<std::uint8_t, 32>;
using Signature = std::array<std::uint8_t, 64>;

// Ed25519 over libsodium. The 32-byte secret is the seed; the public key is derived from it.
class KeyPair {
public:
    static KeyPair fromSecret(const SecretKey& secret);
    // Deterministic key derivation for simulations: the same label always yields the same key.
    static KeyPair derive(std::uint64_t seed, std::string_view label);

    const PublicKey& publicKey() const { return publicKey_; }
    Signature sign(ByteView message) const;

private:
    KeyPair() = default;

    SecretKey secret_{};
    PublicKey publicKey_{};
    std::array<std::uint8_t, 64> expanded_{};
};

bool verifySignature(const PublicKey& key, ByteView message, const Signature& signature);

enum class Permission : std::uint8_t {
    sendCam = 1U << 0,
    sendCpm = 1U << 1,
    sendDenm = 1U << 2,
    sendSpat = 1U << 3,
    sendMap = 1U << 4,
};

class PermissionSet {
public:
    constexpr PermissionSet() = default;
    constexpr PermissionSet(std::initializer_list<Permission> perms) {
        for (auto p : perms) {
            bits_ |= static_cast<std::uint8_t>(p);
        }
    }
    static constexpr PermissionSet fromBits(std::uint8_t bits) {
        PermissionSet s;
        s.bits_ = bits;
        return s;
    }
    static constexpr PermissionSet all() { return fromBits(0x1F); }

    constexpr bool has(Permission p) const { return (bits_ & static_cast<std::uint8_t>(p)) != 0; }
    constexpr bool covers(PermissionSet other) const { return (other.bits_ & ~bits_) == 0; }
    constexpr std::uint8_t bits() const { return bits_; }

    friend constexpr bool operator==(PermissionSet, PermissionSet) = default;

private:
    std::uint8_t bits_ = 0;
};

// Permission a station needs to emit a payload with this tag; nullopt for tags nobody may sign.
std::optional<Permission> requiredPermission(MessageType type);

enum class Issuer : std::uint8_t { rootCa = 0, intermediateCa = 1 };

struct Certificate {
    StationId subject;
    PublicKey subjectPublicKey{};
    PermissionSet permissions;
    Signature issuerSignature{};
    Issuer issuer = Issuer::rootCa;

    friend bool operator==(const Certificate&, const Certificate&) = default;
};

// Bytes covered by issuerSignature: subject, subjectPublicKey, permissions.
Bytes toBeSigned(const Certificate& cert);

struct SignedMessage {
    Bytes payloadBytes;
    Certificate certificate;
    // The intermediate CA certificate when `certificate` was issued by one.
    std::optional<Certificate> issuerCertificate;
    Signature signature{};

    friend bool operator==(const SignedMessage&, const SignedMessage&) = default;
};

class CertificateAuthority {
public:
    // Root authority: self-anchored.
    explicit CertificateAuthority(KeyPair keys);
    // Intermediate authority holding a root-issued certificate.
    CertificateAuthority(KeyPair keys, Certificate certificate);

    const PublicKey& publicKey() const { return keys_.publicKey(); }
    Issuer level() const { return certificate_ ? Issuer::intermediateCa : Issuer::rootCa; }
    const std::optional<Certificate>& certificate() const { return certificate_; }

    Certificate issue(StationId subject, const PublicKey& key, PermissionSet permissions) const;

private:
    KeyPair keys_;
    std::optional<Certificate> certificate_;
};

class Hsm {
public:
    Hsm(KeyPair keys, Certificate certificate, std::optional<Certificate> issuerCertificate = std::nullopt);

    // Content-blind: signs whatever it is handed. Throws KeysPurged after purgeKeys().
    SignedMessage sign(ByteView payloadBytes) const;
    void purgeKeys() noexcept;

    bool purged() const { return !keys_.has_value(); }
    // nullopt once purged.
    const std::optional<Certificate>& certificate() const { return certificate_; }

private:
    std::optional<KeyPair> keys_;
    std::optional<Certificate> certificate_;
    std::optional<Certificate> issuerCertificate_;
};

enum class VerifyResult : std::uint8_t { accept, badSignature, badChain, permissionDenied };

std::string_view toString(VerifyResult result);

VerifyResult verify(const SignedMessage& msg, const PublicKey& rootPublicKey);

// Memoizing verifier; results are a pure function of the envelope bytes and the root key.
class Verifier {
public:
    explicit Verifier(PublicKey rootPublicKey) : root_(rootPublicKey) {}

    VerifyResult operator()(const SignedMessage& msg) const;
    VerifyResult verify(const SignedMessage& msg, const Digest& envelopeDigest) const;

    const PublicKey& rootPublicKey() const { return root_; }

private:
    struct DigestHash {
        std::size_t operator()(const Digest& d) const noexcept;
    };

    PublicKey root_;
    mutable std::unordered_map<Digest, VerifyResult, DigestHash> cache_;
};

Bytes encodeCertificate(const Certificate& cert);
Certificate decodeCertificate(ByteView bytes);
Bytes encodeSigned(const SignedMessage& msg);
SignedMessage decodeSigned(ByteView bytes);

Digest sha256(ByteView bytes);
// Digest of the full serialized envelope; the evidence handle used in reports and DENMs.
Digest digestOf(const SignedMessage& msg);
std::string toHex(ByteView bytes);

}  // namespace sentinel
