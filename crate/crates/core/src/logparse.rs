//! Access-log parsing.
//!
//! A [`LogFormat`] is an ordered list of field tokens. Lines are split into
//! bare words, `[bracketed]` spans and `"quoted"` strings, then matched
//! against the format position by position.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use chrono::{DateTime, FixedOffset, TimeZone};
use serde::{Deserialize, Serialize};
use thiserror::Error;

const TIME_FORMAT: &str = "%d/%b/%Y:%H:%M:%S %z";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("malformed line: {0}")]
    MalformedLine(String),
    #[error("bad timestamp {0:?}")]
    BadTimestamp(String),
    #[error("bad status {0:?}")]
    BadStatus(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("unknown format token {0:?}")]
    UnknownToken(String),
    #[error("format needs exactly one {0} token")]
    Cardinality(&'static str),
    #[error("client-ip token must be last")]
    TrailingIp,
}

/// One field position in a log line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Field {
    /// `h`: remote host. Used as the client IP when no trailing IP field exists.
    Host,
    /// `l` or `i`
    Identd,
    /// `u`
    AuthUser,
    /// `t`: `[02/Apr/2016:00:00:09 -0400]`
    Time,
    /// `r`: `"GET /path HTTP/1.1"`
    Request,
    /// `s`
    Status,
    /// `b`: byte count or `-`
    Size,
    /// `R`: quoted referer
    Referer,
    /// `U`: quoted user agent
    UserAgent,
    /// `A`: quoted client IP, optional at end of line
    ClientIp,
}

impl Field {
    fn letter(self) -> char {
        match self {
            Field::Host => 'h',
            Field::Identd => 'l',
            Field::AuthUser => 'u',
            Field::Time => 't',
            Field::Request => 'r',
            Field::Status => 's',
            Field::Size => 'b',
            Field::Referer => 'R',
            Field::UserAgent => 'U',
            Field::ClientIp => 'A',
        }
    }
}

/// Field layout of a log file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogFormat {
    fields: Vec<Field>,
}

impl LogFormat {
    /// Apache/nginx combined: `h l u t r s b R U`.
    pub fn combined() -> Self {
        "h l u t r s b R U".parse().unwrap()
    }

    /// Common log format: `h l u t r s b`.
    pub fn common() -> Self {
        "h l u t r s b".parse().unwrap()
    }

    /// Two leading placeholders and the real client IP as a trailing quoted
    /// field: `- - [time] "req" status size "referer" "agent" "ip"`.
    pub fn trailing_ip() -> Self {
        "l u t r s b R U A".parse().unwrap()
    }

    pub fn fields(&self) -> &[Field] {
        &self.fields
    }

    fn has(&self, f: Field) -> bool {
        self.fields.contains(&f)
    }

    /// Renders a record back into a line of this format. Fields the record
    /// does not carry (identd, authuser) are written as `-`.
    pub fn format_record(&self, rec: &LogRecord) -> String {
        let mut out = String::new();
        for (i, field) in self.fields.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            match field {
                Field::Host => {
                    let host = if self.has(Field::ClientIp) {
                        None
                    } else {
                        rec.client_ip.as_deref()
                    };
                    out.push_str(host.unwrap_or("-"));
                }
                Field::Identd | Field::AuthUser => out.push('-'),
                Field::Time => {
                    let _ = write!(out, "[{}]", rec.local_time().format(TIME_FORMAT));
                }
                Field::Request => {
                    let mut req = format!("{} {}", rec.method, rec.path);
                    if !rec.protocol.is_empty() {
                        req.push(' ');
                        req.push_str(&rec.protocol);
                    }
                    push_quoted(&mut out, Some(&req));
                }
                Field::Status => {
                    let _ = write!(out, "{}", rec.status);
                }
                Field::Size => match rec.size {
                    Some(n) => {
                        let _ = write!(out, "{n}");
                    }
                    None => out.push('-'),
                },
                Field::Referer => push_quoted(&mut out, rec.referer.as_deref()),
                Field::UserAgent => push_quoted(&mut out, rec.user_agent.as_deref()),
                Field::ClientIp => push_quoted(&mut out, rec.client_ip.as_deref()),
            }
        }
        out
    }
}

impl Default for LogFormat {
    fn default() -> Self {
        Self::trailing_ip()
    }
}

impl FromStr for LogFormat {
    type Err = FormatError;

    /// Accepts either a preset name (`combined`, `common`, `trailing-ip`) or
    /// a whitespace-separated token string such as `"h l u t r s b R U"`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "combined" => return Ok(Self::combined()),
            "common" => return Ok(Self::common()),
            "trailing-ip" | "paper" => return Ok(Self::trailing_ip()),
            _ => {}
        }
        let mut fields = Vec::new();
        for tok in s.split_whitespace() {
            fields.push(match tok {
                "h" => Field::Host,
                "l" | "i" => Field::Identd,
                "u" => Field::AuthUser,
                "t" => Field::Time,
                "r" => Field::Request,
                "s" => Field::Status,
                "b" => Field::Size,
                "R" => Field::Referer,
                "U" => Field::UserAgent,
                "A" => Field::ClientIp,
                other => return Err(FormatError::UnknownToken(other.to_string())),
            });
        }
        for (f, name) in [
            (Field::Time, "time"),
            (Field::Request, "request"),
            (Field::Status, "status"),
        ] {
            if fields.iter().filter(|&&x| x == f).count() != 1 {
                return Err(FormatError::Cardinality(name));
            }
        }
        if let Some(pos) = fields.iter().position(|&f| f == Field::ClientIp) {
            if pos + 1 != fields.len() || fields.iter().filter(|&&f| f == Field::ClientIp).count() > 1 {
                return Err(FormatError::TrailingIp);
            }
        }
        Ok(LogFormat { fields })
    }
}

impl fmt::Display for LogFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, field) in self.fields.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{}", field.letter())?;
        }
        Ok(())
    }
}

/// One parsed access-log entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogRecord {
    /// Seconds since the Unix epoch, UTC.
    pub timestamp: i64,
    /// Offset of the original local time, seconds east of UTC.
    pub utc_offset: i32,
    pub method: String,
    pub path: String,
    pub protocol: String,
    pub status: u16,
    pub size: Option<u64>,
    pub referer: Option<String>,
    pub user_agent: Option<String>,
    pub client_ip: Option<String>,
    pub source_line: usize,
}

impl LogRecord {
    pub fn local_time(&self) -> DateTime<FixedOffset> {
        let offset = FixedOffset::east_opt(self.utc_offset).expect("offset validated at parse");
        offset
            .timestamp_opt(self.timestamp, 0)
            .single()
            .expect("timestamp validated at parse")
    }
}

/// How request paths map to graph resources.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathPolicy {
    #[default]
    Verbatim,
    StripQuery,
}

impl FromStr for PathPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "verbatim" => Ok(PathPolicy::Verbatim),
            "strip-query" => Ok(PathPolicy::StripQuery),
            other => Err(format!("unknown path policy {other:?}")),
        }
    }
}

pub fn resource_key(record: &LogRecord, policy: PathPolicy) -> &str {
    match policy {
        PathPolicy::Verbatim => &record.path,
        PathPolicy::StripQuery => record.path.split('?').next().unwrap_or(""),
    }
}

#[derive(Debug, PartialEq, Eq)]
enum Token<'a> {
    Bare(&'a str),
    Bracketed(&'a str),
    Quoted(String),
}

fn tokenize(line: &str) -> Result<Vec<Token<'_>>, ParseError> {
    let mut tokens = Vec::new();
    let bytes = line.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b' ' | b'\t' => i += 1,
            b'[' => {
                let end = line[i + 1..]
                    .find(']')
                    .ok_or_else(|| ParseError::MalformedLine("unterminated '['".into()))?;
                tokens.push(Token::Bracketed(&line[i + 1..i + 1 + end]));
                i += end + 2;
            }
            b'"' => {
                let mut value = String::new();
                let mut chars = line[i + 1..].char_indices();
                let mut closed = None;
                while let Some((j, c)) = chars.next() {
                    match c {
                        '\\' => match chars.next() {
                            Some((_, e @ ('"' | '\\'))) => value.push(e),
                            Some((_, e)) => {
                                value.push('\\');
                                value.push(e);
                            }
                            None => value.push('\\'),
                        },
                        '"' => {
                            closed = Some(j);
                            break;
                        }
                        c => value.push(c),
                    }
                }
                let j = closed.ok_or_else(|| ParseError::MalformedLine("unterminated quote".into()))?;
                tokens.push(Token::Quoted(value));
                i += j + 2;
            }
            _ => {
                let end = line[i..].find([' ', '\t']).map_or(line.len(), |e| i + e);
                tokens.push(Token::Bare(&line[i..end]));
                i = end;
            }
        }
    }
    Ok(tokens)
}

fn push_quoted(out: &mut String, value: Option<&str>) {
    out.push('"');
    match value {
        Some(v) => {
            for c in v.chars() {
                if c == '"' || c == '\\' {
                    out.push('\\');
                }
                out.push(c);
            }
        }
        None => out.push('-'),
    }
    out.push('"');
}

fn dash_to_none(s: String) -> Option<String> {
    if s == "-" {
        None
    } else {
        Some(s)
    }
}

fn quoted(tok: Token<'_>, what: &str) -> Result<String, ParseError> {
    match tok {
        Token::Quoted(s) => Ok(s),
        Token::Bare("-") => Ok("-".to_string()),
        other => Err(ParseError::MalformedLine(format!(
            "expected quoted {what}, got {other:?}"
        ))),
    }
}

fn bare<'a>(tok: Token<'a>, what: &str) -> Result<&'a str, ParseError> {
    match tok {
        Token::Bare(s) => Ok(s),
        other => Err(ParseError::MalformedLine(format!("expected {what}, got {other:?}"))),
    }
}

/// Parses one log line. `source_line` is left at 0; [`parse_stream`] fills it.
pub fn parse_line(line: &str, format: &LogFormat) -> Result<LogRecord, ParseError> {
    let tokens = tokenize(line.trim_end_matches(['\r', '\n']))?;
    let expected = format.fields.len();
    let optional_tail = format.fields.last() == Some(&Field::ClientIp);
    if tokens.len() != expected && !(optional_tail && tokens.len() + 1 == expected) {
        return Err(ParseError::MalformedLine(format!(
            "expected {expected} fields, found {}",
            tokens.len()
        )));
    }

    let mut host = None;
    let mut timestamp = None;
    let mut request = None;
    let mut status = None;
    let mut size = None;
    let mut referer = None;
    let mut user_agent = None;
    let mut client_ip = None;

    for (field, tok) in format.fields.iter().zip(tokens) {
        match field {
            Field::Host => host = dash_to_none(bare(tok, "host")?.to_string()),
            Field::Identd | Field::AuthUser => {
                bare(tok, "placeholder")?;
            }
            Field::Time => {
                let Token::Bracketed(text) = tok else {
                    return Err(ParseError::MalformedLine(format!("expected [time], got {tok:?}")));
                };
                let dt = DateTime::parse_from_str(text, TIME_FORMAT)
                    .map_err(|_| ParseError::BadTimestamp(text.to_string()))?;
                timestamp = Some(dt);
            }
            Field::Request => {
                let text = quoted(tok, "request")?;
                let parts: Vec<&str> = text.split(' ').collect();
                let (method, path, protocol) = match parts.as_slice() {
                    [m, p, v] => (m, p, *v),
                    [m, p] => (m, p, ""),
                    _ => return Err(ParseError::MalformedLine(format!("bad request {text:?}"))),
                };
                if method.is_empty() || path.is_empty() {
                    return Err(ParseError::MalformedLine(format!("bad request {text:?}")));
                }
                request = Some((method.to_string(), path.to_string(), protocol.to_string()));
            }
            Field::Status => {
                let text = bare(tok, "status")?;
                let code: u16 = text.parse().map_err(|_| ParseError::BadStatus(text.to_string()))?;
                if !(100..=599).contains(&code) {
                    return Err(ParseError::BadStatus(text.to_string()));
                }
                status = Some(code);
            }
            Field::Size => {
                let text = bare(tok, "size")?;
                if text != "-" {
                    size = Some(
                        text.parse::<u64>()
                            .map_err(|_| ParseError::MalformedLine(format!("bad size {text:?}")))?,
                    );
                }
            }
            Field::Referer => referer = dash_to_none(quoted(tok, "referer")?),
            Field::UserAgent => user_agent = dash_to_none(quoted(tok, "user agent")?),
            Field::ClientIp => client_ip = dash_to_none(quoted(tok, "client ip")?),
        }
    }

    let dt = timestamp.expect("format has a time field");
    let (method, path, protocol) = request.expect("format has a request field");
    Ok(LogRecord {
        timestamp: dt.timestamp(),
        utc_offset: dt.offset().local_minus_utc(),
        method,
        path,
        protocol,
        status: status.expect("format has a status field"),
        size,
        referer,
        user_agent,
        client_ip: if format.has(Field::ClientIp) { client_ip } else { host },
        source_line: 0,
    })
}

/// Result of parsing many lines: good records plus `(line number, error)`.
#[derive(Debug, Default, Clone)]
pub struct ParsedStream {
    pub records: Vec<LogRecord>,
    pub errors: Vec<(usize, ParseError)>,
}

/// Parses every line, numbering from 1. Failures are collected, not raised.
pub fn parse_stream<I, S>(lines: I, format: &LogFormat) -> ParsedStream
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut out = ParsedStream::default();
    for (i, line) in lines.into_iter().enumerate() {
        let number = i + 1;
        match parse_line(line.as_ref(), format) {
            Ok(mut rec) => {
                rec.source_line = number;
                out.records.push(rec);
            }
            Err(e) => out.errors.push((number, e)),
        }
    }
    out
}

/// Splits raw file bytes into lines, decoding UTF-8 lossily.
pub fn lines_lossy(bytes: &[u8]) -> Vec<String> {
    let text = String::from_utf8_lossy(bytes);
    let mut lines: Vec<String> = text
        .split('\n')
        .map(|l| l.strip_suffix('\r').unwrap_or(l).to_string())
        .collect();
    if lines.last().is_some_and(|l| l.is_empty()) {
        lines.pop();
    }
    lines
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const SAMPLE: &str = r#"- - [02/Apr/2016:00:00:09 -0400] "GET /path/to/some/resource HTTP/1.1" 200  5972 "http://www.example.com/refererpage.html" "Mozilla/5.0 (iPhone; CPU iPhone OS 7_0 like Mac OS X)" "11.111.111.111""#;

    #[test]
    fn sample_entry() {
        let rec = parse_line(SAMPLE, &LogFormat::trailing_ip()).unwrap();
        // 2016-04-02T04:00:09Z
        assert_eq!(rec.timestamp, 1_459_569_609);
        assert_eq!(rec.utc_offset, -4 * 3600);
        assert_eq!(rec.method, "GET");
        assert_eq!(rec.path, "/path/to/some/resource");
        assert_eq!(rec.protocol, "HTTP/1.1");
        assert_eq!(rec.status, 200);
        assert_eq!(rec.size, Some(5972));
        assert_eq!(rec.referer.as_deref(), Some("http://www.example.com/refererpage.html"));
        assert!(rec.user_agent.as_deref().unwrap().starts_with("Mozilla/5.0 (iPhone;"));
        assert_eq!(rec.client_ip.as_deref(), Some("11.111.111.111"));
    }

    #[test]
    fn dash_size_is_absent() {
        let line = SAMPLE.replace("5972", "-");
        let rec = parse_line(&line, &LogFormat::trailing_ip()).unwrap();
        assert_eq!(rec.size, None);
        assert_eq!(rec.status, 200);
    }

    #[test]
    fn too_few_tokens() {
        let err = parse_line("- - [02/Apr/2016:00:00:09 -0400]", &LogFormat::trailing_ip()).unwrap_err();
        assert!(matches!(err, ParseError::MalformedLine(_)));
    }

    #[test]
    fn bad_status_and_time() {
        let f = LogFormat::trailing_ip();
        assert!(matches!(
            parse_line(&SAMPLE.replace(" 200 ", " 700 "), &f),
            Err(ParseError::BadStatus(_))
        ));
        assert!(matches!(
            parse_line(&SAMPLE.replace(" 200 ", " OK "), &f),
            Err(ParseError::BadStatus(_))
        ));
        assert!(matches!(
            parse_line(&SAMPLE.replace("Apr", "Foo"), &f),
            Err(ParseError::BadTimestamp(_))
        ));
    }

    #[test]
    fn trailing_ip_is_optional() {
        let line = SAMPLE.trim_end_matches(r#" "11.111.111.111""#);
        let rec = parse_line(line, &LogFormat::trailing_ip()).unwrap();
        assert_eq!(rec.client_ip, None);
    }

    #[test]
    fn combined_uses_host_as_ip() {
        let line = r#"10.0.0.1 - frank [10/Oct/2000:13:55:36 -0700] "GET /a.gif?x=1 HTTP/1.0" 200 2326 "-" "Wget/1.0""#;
        let rec = parse_line(line, &LogFormat::combined()).unwrap();
        assert_eq!(rec.client_ip.as_deref(), Some("10.0.0.1"));
        assert_eq!(rec.referer, None);
        assert_eq!(rec.user_agent.as_deref(), Some("Wget/1.0"));
    }

    #[test]
    fn escaped_quotes() {
        let line = SAMPLE.replace("(iPhone;", r#"(\"iPhone\";"#);
        let rec = parse_line(&line, &LogFormat::trailing_ip()).unwrap();
        assert!(rec.user_agent.unwrap().contains(r#"("iPhone";"#));
    }

    #[test]
    fn stream_collects_errors() {
        let f = LogFormat::trailing_ip();
        let out = parse_stream([SAMPLE, SAMPLE, SAMPLE], &f);
        assert_eq!(out.records.len(), 3);
        assert!(out.errors.is_empty());

        let out = parse_stream([SAMPLE, "garbage", SAMPLE], &f);
        assert_eq!(out.records.len(), 2);
        assert_eq!(out.errors.len(), 1);
        assert_eq!(out.errors[0].0, 2);
        assert_eq!(out.records[1].source_line, 3);

        let out = parse_stream(Vec::<String>::new(), &f);
        assert!(out.records.is_empty() && out.errors.is_empty());
    }

    #[test]
    fn resource_keys() {
        let mut rec = parse_line(SAMPLE, &LogFormat::trailing_ip()).unwrap();
        rec.path = "/a/b?x=1".into();
        assert_eq!(resource_key(&rec, PathPolicy::Verbatim), "/a/b?x=1");
        assert_eq!(resource_key(&rec, PathPolicy::StripQuery), "/a/b");
        rec.path = "/a/b".into();
        assert_eq!(resource_key(&rec, PathPolicy::StripQuery), "/a/b");
    }

    #[test]
    fn format_tokens() {
        assert_eq!("h i u t r s b R U A".parse::<LogFormat>().unwrap().fields().len(), 10);
        assert_eq!(LogFormat::combined().to_string(), "h l u t r s b R U");
        assert!(matches!(
            "h t r".parse::<LogFormat>(),
            Err(FormatError::Cardinality("status"))
        ));
        assert!(matches!(
            "t t r s".parse::<LogFormat>(),
            Err(FormatError::Cardinality("time"))
        ));
        assert!(matches!("A t r s".parse::<LogFormat>(), Err(FormatError::TrailingIp)));
        assert!(matches!(
            "t r s x".parse::<LogFormat>(),
            Err(FormatError::UnknownToken(_))
        ));
    }

    #[test]
    fn lossy_lines() {
        let lines = lines_lossy(b"a\r\nb\xff\n");
        assert_eq!(lines, vec!["a".to_string(), "b\u{fffd}".to_string()]);
    }

    fn arb_record() -> impl Strategy<Value = LogRecord> {
        let text = "[ -~]{0,30}";
        (
            0i64..4_000_000_000,
            -47i32..=56,
            "[A-Z]{3,7}",
            "/[!-~]{0,20}",
            prop::option::of(Just("HTTP/1.1".to_string())),
            100u16..600,
            prop::option::of(0u64..10_000_000),
            prop::option::of(text),
            prop::option::of(text),
            prop::option::of("[0-9.]{7,15}"),
        )
            .prop_map(|(ts, q, m, p, proto, s, b, r, u, ip)| LogRecord {
                timestamp: ts,
                utc_offset: q * 900,
                method: m,
                path: p,
                protocol: proto.unwrap_or_default(),
                status: s,
                size: b,
                referer: r.filter(|v| v != "-"),
                user_agent: u.filter(|v| v != "-"),
                client_ip: ip,
                source_line: 0,
            })
    }

    proptest! {
        #[test]
        fn format_then_parse_round_trips(rec in arb_record()) {
            for fmt in [LogFormat::trailing_ip(), LogFormat::combined()] {
                let line = fmt.format_record(&rec);
                let back = parse_line(&line, &fmt).unwrap();
                prop_assert_eq!(&back, &rec);
            }
        }

        #[test]
        fn stream_partitions_lines(lines in prop::collection::vec("[ -~]{0,60}", 0..20)) {
            let out = parse_stream(&lines, &LogFormat::combined());
            prop_assert_eq!(out.records.len() + out.errors.len(), lines.len());
        }
    }
}
