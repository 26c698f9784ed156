#include "sentinel/trust.hpp"

#include <sodium.h>

#include <cstring>
#include <mutex>

#include "sentinel/wire.hpp"

namespace sentinel {

namespace {

void ensureSodium() {
    static std::once_flag once;
    std::call_once(once, [] {
        if (sodium_init() < 0) {
            throw std::runtime_error("libsodium initialisation failed");
        }
    });
}

void putCertificate(wire::Writer& w, const Certificate& c) {
    w.u8(static_cast<std::uint8_t>(MessageType::certificate));
    w.u32(c.subject.value);
    w.raw(c.subjectPublicKey);
    w.u8(c.permissions.bits());
    w.raw(c.issuerSignature);
    w.u8(static_cast<std::uint8_t>(c.issuer));
}

Certificate getCertificate(wire::Reader& r) {
    if (r.u8() != static_cast<std::uint8_t>(MessageType::certificate)) {
        throw MalformedMessage("expected certificate tag");
    }
    Certificate c;
    c.subject.value = r.u32();
    c.subjectPublicKey = r.array<32>();
    const auto perms = r.u8();
    if (perms & ~PermissionSet::all().bits()) {
        throw MalformedMessage("unknown permission bits");
    }
    c.permissions = PermissionSet::fromBits(perms);
    c.issuerSignature = r.array<64>();
    const auto issuer = r.u8();
    if (issuer > 1) {
        throw MalformedMessage("unknown issuer level");
    }
    c.issuer = static_cast<Issuer>(issuer);
    return c;
}

bool certificateSignedBy(const Certificate& cert, const PublicKey& issuerKey) {
    const auto tbs = toBeSigned(cert);
    return verifySignature(issuerKey, tbs, cert.issuerSignature);
}

}  // namespace

KeyPair KeyPair::fromSecret(const SecretKey& secret) {
    ensureSodium();
    KeyPair kp;
    kp.secret_ = secret;
    crypto_sign_seed_keypair(kp.publicKey_.data(), kp.expanded_.data(), secret.data());
    return kp;
}

KeyPair KeyPair::derive(std::uint64_t seed, std::string_view label) {
    wire::Writer w;
    w.u64(seed);
    w.raw(ByteView(reinterpret_cast<const std::uint8_t*>(label.data()), label.size()));
    const auto material = w.take();
    return fromSecret(sha256(material));
}

Signature KeyPair::sign(ByteView message) const {
    Signature sig{};
    crypto_sign_detached(sig.data(), nullptr, message.data(), message.size(), expanded_.data());
    return sig;
}

bool verifySignature(const PublicKey& key, ByteView message, const Signature& signature) {
    ensureSodium();
    return crypto_sign_verify_detached(signature.data(), message.data(), message.size(), key.data()) == 0;
}

std::optional<Permission> requiredPermission(MessageType type) {
    switch (type) {
        case MessageType::cam: return Permission::sendCam;
        case MessageType::cpm: return Permission::sendCpm;
        case MessageType::denm: return Permission::sendDenm;
        case MessageType::spat: return Permission::sendSpat;
        case MessageType::map: return Permission::sendMap;
        default: return std::nullopt;
    }
}

Bytes toBeSigned(const Certificate& cert) {
    wire::Writer w;
    w.u32(cert.subject.value);
    w.raw(cert.subjectPublicKey);
    w.u8(cert.permissions.bits());
    return w.take();
}

CertificateAuthority::CertificateAuthority(KeyPair keys) : keys_(std::move(keys)) {}

CertificateAuthority::CertificateAuthority(KeyPair keys, Certificate certificate)
    : keys_(std::move(keys)), certificate_(std::move(certificate)) {}

Certificate CertificateAuthority::issue(StationId subject, const PublicKey& key, PermissionSet permissions) const {
    Certificate c;
    c.subject = subject;
    c.subjectPublicKey = key;
    c.permissions = permissions;
    c.issuer = level();
    c.issuerSignature = keys_.sign(toBeSigned(c));
    return c;
}

Hsm::Hsm(KeyPair keys, Certificate certificate, std::optional<Certificate> issuerCertificate)
    : keys_(std::move(keys)),
      certificate_(std::move(certificate)),
      issuerCertificate_(std::move(issuerCertificate)) {}

SignedMessage Hsm::sign(ByteView payloadBytes) const {
    if (!keys_) {
        throw KeysPurged("HSM keys were purged");
    }
    SignedMessage msg;
    msg.payloadBytes.assign(payloadBytes.begin(), payloadBytes.end());
    msg.certificate = *certificate_;
    msg.issuerCertificate = issuerCertificate_;
    msg.signature = keys_->sign(payloadBytes);
    return msg;
}

void Hsm::purgeKeys() noexcept {
    if (keys_) {
        // best effort wipe of the key material before dropping it
        sodium_memzero(&*keys_, sizeof(KeyPair));
    }
    keys_.reset();
    certificate_.reset();
}

std::string_view toString(VerifyResult result) {
    switch (result) {
        case VerifyResult::accept: return "Accept";
        case VerifyResult::badSignature: return "BadSignature";
        case VerifyResult::badChain: return "BadChain";
        case VerifyResult::permissionDenied: return "PermissionDenied";
    }
    return "?";
}

VerifyResult verify(const SignedMessage& msg, const PublicKey& rootPublicKey) {
    const auto& cert = msg.certificate;
    if (cert.issuer == Issuer::rootCa) {
        if (msg.issuerCertificate || !certificateSignedBy(cert, rootPublicKey)) {
            return VerifyResult::badChain;
        }
    } else {
        if (!msg.issuerCertificate) {
            return VerifyResult::badChain;
        }
        const auto& ca = *msg.issuerCertificate;
        if (ca.issuer != Issuer::rootCa || !certificateSignedBy(ca, rootPublicKey) ||
            !certificateSignedBy(cert, ca.subjectPublicKey) || !ca.permissions.covers(cert.permissions)) {
            return VerifyResult::badChain;
        }
    }
    if (!verifySignature(cert.subjectPublicKey, msg.payloadBytes, msg.signature)) {
        return VerifyResult::badSignature;
    }
    if (msg.payloadBytes.empty()) {
        return VerifyResult::permissionDenied;
    }
    const auto needed = requiredPermission(static_cast<MessageType>(msg.payloadBytes[0]));
    if (!needed || !cert.permissions.has(*needed)) {
        return VerifyResult::permissionDenied;
    }
    return VerifyResult::accept;
}

std::size_t Verifier::DigestHash::operator()(const Digest& d) const noexcept {
    std::size_t h = 0;
    std::memcpy(&h, d.data(), sizeof(h));
    return h;
}

VerifyResult Verifier::operator()(const SignedMessage& msg) const { return verify(msg, digestOf(msg)); }

VerifyResult Verifier::verify(const SignedMessage& msg, const Digest& envelopeDigest) const {
    if (auto it = cache_.find(envelopeDigest); it != cache_.end()) {
        return it->second;
    }
    const auto result = sentinel::verify(msg, root_);
    cache_.emplace(envelopeDigest, result);
    return result;
}

Bytes encodeCertificate(const Certificate& cert) {
    wire::Writer w;
    putCertificate(w, cert);
    return w.take();
}

Certificate decodeCertificate(ByteView bytes) {
    wire::Reader r(bytes);
    auto c = getCertificate(r);
    r.finish();
    return c;
}

Bytes encodeSigned(const SignedMessage& msg) {
    wire::Writer w;
    w.u8(static_cast<std::uint8_t>(MessageType::signedMessage));
    w.u32(static_cast<std::uint32_t>(msg.payloadBytes.size()));
    w.raw(msg.payloadBytes);
    putCertificate(w, msg.certificate);
    w.u8(msg.issuerCertificate ? 1 : 0);
    if (msg.issuerCertificate) {
        putCertificate(w, *msg.issuerCertificate);
    }
    w.raw(msg.signature);
    return w.take();
}

SignedMessage decodeSigned(ByteView bytes) {
    wire::Reader r(bytes);
    if (bytes.empty()) {
        throw MalformedMessage("empty envelope");
    }
    if (r.u8() != static_cast<std::uint8_t>(MessageType::signedMessage)) {
        throw MalformedMessage("expected signed-message tag");
    }
    SignedMessage msg;
    const auto len = r.u32();
    auto payload = r.raw(len);
    msg.payloadBytes.assign(payload.begin(), payload.end());
    msg.certificate = getCertificate(r);
    const auto hasIssuer = r.u8();
    if (hasIssuer > 1) {
        throw MalformedMessage("bad issuer-certificate flag");
    }
    if (hasIssuer) {
        msg.issuerCertificate = getCertificate(r);
    }
    msg.signature = r.array<64>();
    r.finish();
    return msg;
}

Digest sha256(ByteView bytes) {
    ensureSodium();
    Digest d{};
    crypto_hash_sha256(d.data(), bytes.data(), bytes.size());
    return d;
}

Digest digestOf(const SignedMessage& msg) { return sha256(encodeSigned(msg)); }

std::string toHex(ByteView bytes) {
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (auto b : bytes) {
        out.push_back(kHex[b >> 4]);
        out.push_back(kHex[b & 0xF]);
    }
    return out;
}

}  // namespace sentinel
