package com.acme.flow;

import com.thoughtworks.xstream.XStream;

public class Importer {

    private final XStream xstream = new XStream();

    public Object importDocument(String input, boolean strip) {
        String xml = input;
        if (strip) {
            xml = input.trim();
        }
        return xstream.fromXML(xml);
    }
}
