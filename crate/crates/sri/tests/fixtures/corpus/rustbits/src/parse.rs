use std::num::ParseIntError;

#[derive(Debug, PartialEq)]
pub enum Token {
    Num(i64),
    Plus,
    Minus,
    Star,
    LParen,
    RParen,
}

pub fn tokenize(input: &str) -> Result<Vec<Token>, ParseIntError> {
    let mut out = Vec::new();
    let chars: Vec<char> = input.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            out.push(Token::Num(text.parse()?));
            continue;
        }
        match c {
            '+' => out.push(Token::Plus),
            '-' => out.push(Token::Minus),
            '*' => out.push(Token::Star),
            '(' => out.push(Token::LParen),
            ')' => out.push(Token::RParen),
            _ => {}
        }
        i += 1;
    }
    Ok(out)
}

pub fn eval(tokens: &[Token]) -> i64 {
    let mut total = 0;
    let mut sign = 1;
    for t in tokens {
        match t {
            Token::Num(n) => total += sign * n,
            Token::Plus => sign = 1,
            Token::Minus => sign = -1,
            _ => {}
        }
    }
    total
}
