//! Start line + ordered header multimap + body, CRLF line discipline.

use super::SipError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SipKind {
    Request { method: String, uri: String },
    Response { code: u16, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SipMessage {
    pub kind: SipKind,
    /// Insertion-ordered; lookups are case-insensitive on the name.
    pub headers: Vec<(String, String)>,
    pub body: Vec<u8>,
    /// Forces the emitted Content-Length; `None` recomputes from the body.
    pub content_length_override: Option<usize>,
}

impl SipMessage {
    pub fn request(method: &str, uri: &str) -> Self {
        SipMessage {
            kind: SipKind::Request { method: method.into(), uri: uri.into() },
            headers: Vec::new(),
            body: Vec::new(),
            content_length_override: None,
        }
    }

    pub fn response(code: u16, reason: &str) -> Self {
        SipMessage {
            kind: SipKind::Response { code, reason: reason.into() },
            headers: Vec::new(),
            body: Vec::new(),
            content_length_override: None,
        }
    }

    pub fn is_request(&self, method: &str) -> bool {
        matches!(&self.kind, SipKind::Request { method: m, .. } if m.eq_ignore_ascii_case(method))
    }

    pub fn status_code(&self) -> Option<u16> {
        match &self.kind {
            SipKind::Response { code, .. } => Some(*code),
            SipKind::Request { .. } => None,
        }
    }

    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers
            .iter()
            .find(|(n, _)| n.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }

    pub fn headers_all<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.headers
            .iter()
            .filter(move |(n, _)| n.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }

    /// Replace the first occurrence, or append if absent.
    pub fn set_header(&mut self, name: &str, value: &str) {
        if let Some(slot) = self.headers.iter_mut().find(|(n, _)| n.eq_ignore_ascii_case(name)) {
            slot.1 = value.to_string();
        } else {
            self.headers.push((name.to_string(), value.to_string()));
        }
    }

    pub fn push_header(&mut self, name: &str, value: &str) {
        self.headers.push((name.to_string(), value.to_string()));
    }

    pub fn remove_header(&mut self, name: &str) -> bool {
        let before = self.headers.len();
        self.headers.retain(|(n, _)| !n.eq_ignore_ascii_case(name));
        self.headers.len() != before
    }

    pub fn start_line(&self) -> String {
        match &self.kind {
            SipKind::Request { method, uri } => format!("{method} {uri} SIP/2.0"),
            SipKind::Response { code, reason } => format!("SIP/2.0 {code} {reason}"),
        }
    }
}

pub fn parse_sip(bytes: &[u8]) -> Result<SipMessage, SipError> {
    let text_end = find_separator(bytes).ok_or(SipError::MissingSeparator)?;
    let head = std::str::from_utf8(&bytes[..text_end])
        .map_err(|_| SipError::MalformedStartLine("non-utf8 header section".into()))?;
    let body = bytes[text_end + 4..].to_vec();

    let mut lines = head.split("\r\n");
    let start = lines.next().unwrap_or_default();
    let kind = parse_start_line(start)?;

    let mut headers = Vec::new();
    for line in lines {
        if line.is_empty() {
            continue;
        }
        match line.split_once(':') {
            Some((name, value)) => headers.push((name.trim().to_string(), value.trim().to_string())),
            // tolerate junk header lines: keep them addressable for logging
            None => headers.push((line.trim().to_string(), String::new())),
        }
    }
    Ok(SipMessage { kind, headers, body, content_length_override: None })
}

fn find_separator(bytes: &[u8]) -> Option<usize> {
    bytes.windows(4).position(|w| w == b"\r\n\r\n")
}

fn parse_start_line(line: &str) -> Result<SipKind, SipError> {
    if let Some(rest) = line.strip_prefix("SIP/2.0 ") {
        let mut parts = rest.splitn(2, ' ');
        let code = parts
            .next()
            .and_then(|c| c.parse::<u16>().ok())
            .ok_or_else(|| SipError::MalformedStartLine(line.into()))?;
        let reason = parts.next().unwrap_or("").to_string();
        return Ok(SipKind::Response { code, reason });
    }
    let mut parts = line.split(' ');
    match (parts.next(), parts.next(), parts.next()) {
        (Some(method), Some(uri), Some("SIP/2.0")) if !method.is_empty() => Ok(SipKind::Request {
            method: method.to_string(),
            uri: uri.to_string(),
        }),
        _ => Err(SipError::MalformedStartLine(line.into())),
    }
}

pub fn serialize_sip(m: &SipMessage) -> Vec<u8> {
    let content_length = m.content_length_override.unwrap_or(m.body.len());
    let mut out = m.start_line().into_bytes();
    out.extend_from_slice(b"\r\n");
    let mut wrote_cl = false;
    for (name, value) in &m.headers {
        let emitted = if name.eq_ignore_ascii_case("Content-Length") {
            wrote_cl = true;
            content_length.to_string()
        } else {
            value.clone()
        };
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(b": ");
        out.extend_from_slice(emitted.as_bytes());
        out.extend_from_slice(b"\r\n");
    }
    if !wrote_cl {
        out.extend_from_slice(format!("Content-Length: {content_length}\r\n").as_bytes());
    }
    out.extend_from_slice(b"\r\n");
    out.extend_from_slice(&m.body);
    out
}
