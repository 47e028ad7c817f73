//! Strict RFC 4180 reader: CRLF record separators, `"`-quoted fields with
//! `""` as the only escape, a final CRLF.

pub fn parse(text: &str) -> Result<Vec<Vec<String>>, String> {
    let mut records = Vec::new();
    let mut record = Vec::new();
    let mut field = String::new();
    let mut chars = text.chars().peekable();
    let mut at_field_start = true;
    loop {
        if at_field_start && chars.peek() == Some(&'"') {
            chars.next();
            loop {
                match chars.next() {
                    None => return Err("unterminated quoted field".into()),
                    Some('"') if chars.peek() == Some(&'"') => {
                        chars.next();
                        field.push('"');
                    }
                    Some('"') => break,
                    Some(c) => field.push(c),
                }
            }
            at_field_start = false;
            match chars.peek() {
                Some(',') | Some('\r') | None => {}
                Some(c) => return Err(format!("character {c:?} after closing quote")),
            }
            continue;
        }
        match chars.next() {
            None => {
                if !at_field_start || !record.is_empty() {
                    return Err("last record lacks CRLF".into());
                }
                return Ok(records);
            }
            Some(',') => {
                record.push(std::mem::take(&mut field));
                at_field_start = true;
            }
            Some('\r') => {
                if chars.next() != Some('\n') {
                    return Err("bare CR".into());
                }
                record.push(std::mem::take(&mut field));
                records.push(std::mem::take(&mut record));
                at_field_start = true;
            }
            Some('\n') => return Err("bare LF".into()),
            Some('"') => return Err("quote inside an unquoted field".into()),
            Some(c) => {
                field.push(c);
                at_field_start = false;
            }
        }
    }
}
