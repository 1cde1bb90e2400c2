//! Bearer tokens: `base64url(claims).base64url(hmac_sha256(secret, claims))`.
//! Stateless, so tokens survive restarts and need no storage.

use base64::engine::general_purpose::URL_SAFE_NO_PAD;
use base64::Engine;
use chrono::{DateTime, Duration, Utc};
use hmac::{Hmac, Mac};
use serde::{Deserialize, Serialize};
use sha2::Sha256;
use thiserror::Error;

type HmacSha256 = Hmac<Sha256>;

/// Random bytes per token.
pub const NONCE_BYTES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Student,
    Instructor,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Claims {
    pub player: String,
    pub role: Role,
    /// Unix seconds.
    pub exp: i64,
    pub nonce: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionToken {
    pub token: String,
    pub player: String,
    pub role: Role,
    pub expires: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AuthError {
    #[error("missing bearer token")]
    Missing,
    #[error("malformed token")]
    Malformed,
    #[error("bad token signature")]
    BadSignature,
    #[error("token expired")]
    Expired,
    #[error("no entropy source: {0}")]
    Entropy(String),
}

fn mac(secret: &[u8]) -> HmacSha256 {
    HmacSha256::new_from_slice(secret).expect("hmac takes keys of any length")
}

pub fn issue_token(secret: &[u8], player: &str, role: Role, ttl: Duration, now: DateTime<Utc>) -> Result<SessionToken, AuthError> {
    let mut nonce = [0u8; NONCE_BYTES];
    getrandom::fill(&mut nonce).map_err(|e| AuthError::Entropy(e.to_string()))?;
    let expires = now + ttl;
    let claims = Claims { player: player.to_string(), role, exp: expires.timestamp(), nonce: hex::encode(nonce) };
    let body = URL_SAFE_NO_PAD.encode(serde_json::to_vec(&claims).expect("claims serialise"));
    let mut m = mac(secret);
    m.update(body.as_bytes());
    let sig = URL_SAFE_NO_PAD.encode(m.finalize().into_bytes());
    let expires = DateTime::from_timestamp(claims.exp, 0).expect("expiry in range");
    Ok(SessionToken { token: format!("{body}.{sig}"), player: player.to_string(), role, expires })
}

/// Signature first, then expiry; the comparison is constant-time.
pub fn verify_token(secret: &[u8], token: &str, now: DateTime<Utc>) -> Result<Claims, AuthError> {
    let (body, sig) = token.split_once('.').ok_or(AuthError::Malformed)?;
    let sig = URL_SAFE_NO_PAD.decode(sig).map_err(|_| AuthError::Malformed)?;
    let mut m = mac(secret);
    m.update(body.as_bytes());
    m.verify_slice(&sig).map_err(|_| AuthError::BadSignature)?;
    let bytes = URL_SAFE_NO_PAD.decode(body).map_err(|_| AuthError::Malformed)?;
    let claims: Claims = serde_json::from_slice(&bytes).map_err(|_| AuthError::Malformed)?;
    if now.timestamp() >= claims.exp {
        return Err(AuthError::Expired);
    }
    Ok(claims)
}
